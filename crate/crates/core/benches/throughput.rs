//! Sequential against parallel execution for the batch-shaped workloads.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use matterwave::constants::NM;
use matterwave::fit::{fit_order_intensities_with, FitOptions, OrderIntensity};
use matterwave::model::oracle::phasor_sum_reference;
use matterwave::model::{intensity_profile, quantum_order_intensity, Grating, QuantumPeakParams, Species};
use matterwave::synthesis::{expected_counts, DetectorConfig, MixtureComponent};
use matterwave::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn grating() -> Grating {
    Grating::new(100.0 * NM, 71.2 * NM, 200).unwrap()
}

fn profile(c: &mut Criterion) {
    let g = grating();
    let k = 2.0 * PI / 1e-10;
    let mut group = c.benchmark_group("intensity_profile");
    for bins in [1_000usize, 100_000] {
        let thetas: Vec<f64> = (0..bins).map(|i| -8e-3 + 16e-3 * i as f64 / (bins - 1) as f64).collect();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, bins), &thetas, |b, t| {
                b.iter(|| intensity_profile(black_box(t), &g, k, exec))
            });
        }
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let g = grating();
    let mix: Vec<MixtureComponent> = (1..=4)
        .map(|n| MixtureComponent {
            species: Species::helium_cluster(n),
            relative_abundance: 0.25,
            peak_params: QuantumPeakParams::new(60.0 * NM, 5.0 * NM, 3.0 * NM, 1.0).unwrap(),
        })
        .collect();
    let det = DetectorConfig {
        angle_min: -8e-3,
        angle_max: 8e-3,
        num_bins: 16_001,
        angular_resolution_fwhm: 5e-5,
        exposure_scale: 1e5,
    };
    let mut group = c.benchmark_group("expected_counts");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| expected_counts(black_box(&mix), 1000.0, &g, &det, exec).unwrap()));
    }
    group.finish();
}

fn fit(c: &mut Criterion) {
    let d = 100.0 * NM;
    let truth = QuantumPeakParams::new(60.0 * NM, 5.0 * NM, 3.0 * NM, 1e5).unwrap();
    let orders: Vec<OrderIntensity> = (-7..=7)
        .map(|n| {
            let i = quantum_order_intensity(n, &truth, d).unwrap();
            OrderIntensity { order_n: n, intensity: i, uncertainty: i.sqrt().max(1.0), truncated: false }
        })
        .collect();
    let opts = FitOptions::default();
    let mut group = c.benchmark_group("fit_order_intensities");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| fit_order_intensities_with(black_box(&orders), d, None, &opts, exec).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let g = Grating::new(100.0 * NM, 71.2 * NM, 32).unwrap();
    let k = 2.0 * PI / 1e-10;
    let thetas: Vec<f64> = (0..256).map(|i| 1e-5 * i as f64).collect();
    let mut group = c.benchmark_group("phasor_sum_reference");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| exec.map(black_box(&thetas), |&t| phasor_sum_reference(t, &g, k))));
    }
    group.finish();
}

criterion_group!(benches, profile, synthesis, fit, oracle);
criterion_main!(benches);
