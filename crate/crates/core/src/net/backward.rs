use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::network::{Body, ForwardCache, Network};
use crate::error::Result;

/// Parameter gradients, one flat vector per tensor of [`Network::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients { tensors: net.params().iter().map(|p| vec![0.0; p.len()]).collect() }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn norm(&self) -> f64 {
        self.tensors.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn flat2(a: Array2<f64>) -> Vec<f64> {
    if a.is_standard_layout() {
        a.into_raw_vec_and_offset().0
    } else {
        a.iter().copied().collect()
    }
}

impl Network {
    /// Gradient of `upstream · f(x)` with respect to every learnable parameter.
    pub fn backward(&self, x: &[f64], upstream: f64) -> Result<Gradients> {
        let view = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        let cache = self.forward_cached(view)?;
        Ok(self.backward_batch(&cache, ArrayView1::from(&[upstream])))
    }

    /// Gradient of `Σ_i upstream_i · f(x_i)` given a cached forward pass.
    pub fn backward_batch(&self, cache: &ForwardCache, upstream: ArrayView1<f64>) -> Gradients {
        let spec = self.spec();
        match self.body() {
            Body::Unbiased(f) => {
                // f(x) = Σ_j m_j sin(z_j),  z = ω X Kᵀ + φ
                let z = &cache.last_hidden;
                let g_mag = z.mapv(f64::sin).t().dot(&upstream);
                let mut cosw = z.mapv(f64::cos);
                cosw *= &f.magnitude;
                let g_phase = cosw.t().dot(&upstream);
                Gradients { tensors: vec![g_phase.to_vec(), g_mag.to_vec()] }
            }
            Body::Mlp { hidden, output } => {
                let u = upstream.insert_axis(Axis(1)); // n × 1
                let mut rev: Vec<Vec<Vec<f64>>> = Vec::with_capacity(hidden.len() + 1);
                rev.push(vec![flat2(u.t().dot(&cache.last_hidden)), vec![upstream.sum()]]);
                // dL/dh for the input of the output layer.
                let mut dh: Array2<f64> = u.dot(&output.weight);
                let act = spec.activation;
                let p = spec.prefactor;
                for (l, (layer, lc)) in hidden.iter().zip(&cache.layers).enumerate().rev() {
                    let mut tensors = Vec::with_capacity(6);
                    // h_out = [z +] φ(p z) ⊙ g
                    let mut dz = Array2::zeros(lc.z.raw_dim());
                    match &lc.gate {
                        Some(g) => Zip::from(&mut dz).and(&dh).and(&lc.z).and(g).for_each(|d, &dh, &z, &g| {
                            *d = dh * g * p * act.derivative(p * z);
                        }),
                        None => Zip::from(&mut dz).and(&dh).and(&lc.z).for_each(|d, &dh, &z| {
                            *d = dh * p * act.derivative(p * z);
                        }),
                    }
                    if spec.residual {
                        dz += &dh;
                    }
                    let gate_grad = match (&layer.gate, &lc.gate) {
                        (Some(gate), Some(g)) => {
                            let mut dgpre = Array2::zeros(g.raw_dim());
                            Zip::from(&mut dgpre).and(&dh).and(&lc.z).and(g).for_each(|d, &dh, &z, &g| {
                                *d = dh * act.apply(p * z) * g * (1.0 - g);
                            });
                            Some((dgpre, gate))
                        }
                        _ => None,
                    };
                    let mut norm_grad = None;
                    let dpre = match (&layer.norm, &lc.norm) {
                        (Some(norm), Some((xhat, inv_std))) => {
                            let g_gain = (&dz * xhat).sum_axis(Axis(0));
                            let g_offset = dz.sum_axis(Axis(0));
                            let dxhat = &dz * &norm.gain;
                            norm_grad = Some((g_gain, g_offset));
                            layernorm_backward(dxhat.view(), xhat.view(), inv_std.view())
                        }
                        _ => dz,
                    };
                    tensors.push(flat2(dpre.t().dot(&lc.input)));
                    tensors.push(dpre.sum_axis(Axis(0)).to_vec());
                    let need_input_grad = l > 0;
                    let mut dh_in = if need_input_grad { Some(dpre.dot(&layer.affine.weight)) } else { None };
                    if let Some((dgpre, gate)) = gate_grad {
                        tensors.push(flat2(dgpre.t().dot(&lc.input)));
                        tensors.push(dgpre.sum_axis(Axis(0)).to_vec());
                        if let Some(dh_in) = dh_in.as_mut() {
                            *dh_in += &dgpre.dot(&gate.weight);
                        }
                    }
                    if let Some((g_gain, g_offset)) = norm_grad {
                        tensors.push(g_gain.to_vec());
                        tensors.push(g_offset.to_vec());
                    }
                    rev.push(tensors);
                    if let Some(next) = dh_in {
                        dh = next;
                    }
                }
                Gradients { tensors: rev.into_iter().rev().flatten().collect() }
            }
        }
    }

    /// Mean-reduced full-batch gradient of `Σ_i upstream_i f(x_i) / n`.
    pub fn gradient_mean(&self, x: ArrayView2<f64>, upstream: ArrayView1<f64>) -> Result<Gradients> {
        let cache = self.forward_cached(x)?;
        let mut g = self.backward_batch(&cache, upstream);
        g.scale(1.0 / x.nrows().max(1) as f64);
        Ok(g)
    }
}

/// Backward through `x̂ = (z − mean) · inv_std`, row-wise:
/// `dz = inv_std · (dx̂ − mean(dx̂) − x̂ · mean(dx̂ ⊙ x̂))`.
fn layernorm_backward(dxhat: ArrayView2<f64>, xhat: ArrayView2<f64>, inv_std: ArrayView1<f64>) -> Array2<f64> {
    let width = dxhat.ncols() as f64;
    let mut out = Array2::zeros(dxhat.raw_dim());
    for ((mut o, (dx, xh)), &inv) in out
        .axis_iter_mut(Axis(0))
        .zip(dxhat.axis_iter(Axis(0)).zip(xhat.axis_iter(Axis(0))))
        .zip(inv_std.iter())
    {
        let mean_dx = dx.sum() / width;
        let mean_dx_xh = dx.dot(&xh) / width;
        Zip::from(&mut o).and(&dx).and(&xh).for_each(|o, &d, &x| {
            *o = inv * (d - mean_dx - x * mean_dx_xh);
        });
    }
    out
}
