use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::net::{Network, ParamKind};
use crate::rng::{self, role};
use crate::stats;

/// Permutes the entries of every weight and bias tensor among themselves.
/// Layernorm gains and offsets are left in place.
pub fn shuffle_within_layers(net: &Network, seed: u64) -> Network {
    let mut out = net.clone();
    let infos = out.param_info();
    for (k, (info, tensor)) in infos.iter().zip(out.params_mut()).enumerate() {
        if matches!(info.kind, ParamKind::NormGain | ParamKind::NormOffset) {
            continue;
        }
        let mut r = rng::stream(seed, &[k as u64, role::SHUFFLE]);
        tensor.shuffle(&mut r);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub name: String,
    pub count: usize,
    pub mean_abs: f64,
    pub max_abs: f64,
    pub median_abs: f64,
    pub q90_abs: f64,
    pub q99_abs: f64,
}

/// Magnitude summary of each weight tensor.
pub fn weight_stats(net: &Network) -> Vec<LayerStats> {
    net.param_info()
        .into_iter()
        .zip(net.params())
        .filter(|(info, _)| info.kind.is_weight())
        .map(|(info, p)| {
            let abs: Vec<f64> = p.iter().map(|v| v.abs()).collect();
            LayerStats {
                name: info.name,
                count: abs.len(),
                mean_abs: stats::mean(&abs),
                max_abs: abs.iter().cloned().fold(0.0, f64::max),
                median_abs: stats::quantile(&abs, 0.5),
                q90_abs: stats::quantile(&abs, 0.9),
                q99_abs: stats::quantile(&abs, 0.99),
            }
        })
        .collect()
}

/// Mean |w| over all weight entries of the network.
pub fn mean_abs_weight(net: &Network) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (info, p) in net.param_info().iter().zip(net.params()) {
        if info.kind.is_weight() {
            sum += p.iter().map(|v| v.abs()).sum::<f64>();
            n += p.len();
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Ratio of the largest to the mean weight magnitude, pooled over layers.
pub fn tail_ratio(net: &Network) -> f64 {
    let stats = weight_stats(net);
    let max = stats.iter().map(|s| s.max_abs).fold(0.0, f64::max);
    let mean = mean_abs_weight(net);
    if mean == 0.0 {
        0.0
    } else {
        max / mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{glorot_bound, ActivationKind, ArchSpec, InitSpec};

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    }

    #[test]
    fn shuffling_preserves_each_multiset() {
        let spec = ArchSpec::mlp(ActivationKind::Tanh, 3, 16).with_layernorm(true).with_gating(true);
        let net = Network::init(&spec, &InitSpec::seeded(4)).unwrap();
        let shuffled = shuffle_within_layers(&net, 9);
        assert_ne!(net, shuffled);
        for ((info, a), b) in net.param_info().iter().zip(net.params()).zip(shuffled.params()) {
            assert_eq!(sorted(a), sorted(b), "{}", info.name);
            if matches!(info.kind, ParamKind::NormGain | ParamKind::NormOffset) {
                assert_eq!(a, b);
            }
        }
        assert_eq!(shuffled, shuffle_within_layers(&net, 9));
    }

    #[test]
    fn single_entry_tensors_unchanged() {
        let net = Network::init(&ArchSpec::mlp(ActivationKind::Relu, 1, 1).with_input_dim(1), &InitSpec::seeded(0))
            .unwrap();
        assert_eq!(shuffle_within_layers(&net, 3), net);
    }

    #[test]
    fn zero_network_stats() {
        let net = Network::init(&ArchSpec::default().with_weight_scale(0.0), &InitSpec::seeded(0)).unwrap();
        for s in weight_stats(&net) {
            assert_eq!((s.mean_abs, s.max_abs, s.q99_abs), (0.0, 0.0, 0.0));
        }
        assert_eq!(mean_abs_weight(&net), 0.0);
    }

    #[test]
    fn uniform_mean_magnitude_is_half_bound() {
        let net = Network::init(&ArchSpec::mlp(ActivationKind::Relu, 2, 256), &InitSpec::seeded(1)).unwrap();
        let s = &weight_stats(&net)[1];
        let bound = glorot_bound(256, 256, 1.0);
        assert!((s.mean_abs / (bound / 2.0) - 1.0).abs() < 0.05);
        assert!(s.max_abs <= bound);
    }
}
