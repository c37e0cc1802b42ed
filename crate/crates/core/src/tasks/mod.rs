//! Datasets: modulo addition, Colored-MNIST and coordinate images.

mod cmnist;
mod coords;
mod idx;
mod metric;
mod modulo;

use ndarray::{ArrayView1, ArrayView2};

pub use cmnist::{build_colored_mnist, color_oracle_accuracy, digit_label, CmnistVariant, ColoredMnist, CORRUPTION_RATE};
pub use coords::{
    gen_waves, image_task, shapes_target, shapes_task, wave_extrema, wave_value, CoordinateImageTask,
    IMAGE_TRAIN_FRACTION,
};
pub use idx::{
    bundled_mnist_dir, encode_images, encode_labels, load_mnist_dir, load_mnist_idx, parse_images, parse_labels,
    read_maybe_gz, IdxImages, MnistRaw, MnistSplits, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use metric::{binary_accuracy, regression_accuracy};
pub use modulo::{gen_modulo, modulo_label, scale_input, ModuloData, ModuloSplit, ModuloTask, MAX_MODULO_POINTS};

use crate::csv::{self, Table};

/// Inputs `x0..` followed by the target column `y`.
pub fn dataset_csv(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Table {
    let mut header: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let mut t = Table::new(&header);
    for (row, &target) in x.rows().into_iter().zip(y) {
        let mut fields: Vec<String> = row.iter().map(|&v| csv::real(v)).collect();
        fields.push(csv::real(target));
        t.row(fields);
    }
    t
}
