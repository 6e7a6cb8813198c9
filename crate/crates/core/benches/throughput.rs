//! Throughput comparison of the data-parallel execution path against the
//! plain sequential fallback, on the two hottest batch workloads: forward
//! propagation over many inputs and system-matrix assembly by basis
//! probing. Build with `--no-default-features` to measure what the
//! sequential-only configuration delivers end to end.

use criterion::{criterion_group, criterion_main, Criterion};
use diffstack::optics::EvanescentMode;
use diffstack::{exec, synth, SystemMatrix};

fn batch_forward(c: &mut Criterion) {
    let stack = synth::random_stack(16, 3, 2, EvanescentMode::Decay, 1).unwrap();
    let inputs: Vec<_> = (0..64)
        .map(|i| synth::random_unit_field(16, stack.pixel_pitch(), 1000 + i))
        .collect();
    let mut group = c.benchmark_group("batch_forward_64_inputs_n16_l3");
    group.bench_function("configured", |b| {
        b.iter(|| exec::map(inputs.len(), |i| stack.forward(&inputs[i]).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::map_sequential(inputs.len(), |i| stack.forward(&inputs[i]).unwrap()))
    });
    group.finish();
}

fn matrix_assembly(c: &mut Criterion) {
    // Assembly probes one basis vector per column; the configured path
    // parallelizes over columns, the baseline rebuilds them sequentially.
    let stack = synth::random_stack(8, 2, 1, EvanescentMode::Decay, 2).unwrap();
    let mut group = c.benchmark_group("matrix_assembly_n8_l2");
    group.bench_function("configured", |b| {
        b.iter(|| SystemMatrix::assemble(&stack).unwrap())
    });
    group.bench_function("sequential_probe", |b| {
        b.iter(|| {
            exec::map_sequential(64, |col| {
                let mut data = vec![num_complex::Complex64::new(0.0, 0.0); 64];
                data[col] = num_complex::Complex64::new(1.0, 0.0);
                let basis =
                    diffstack::AmplitudeField::new(8, stack.pixel_pitch(), data).unwrap();
                stack.forward(&basis).unwrap()
            })
        })
    });
    group.finish();
}

fn bound_chain_batch(c: &mut Criterion) {
    let stack = synth::random_stack(8, 2, 2, EvanescentMode::Decay, 3).unwrap();
    let pairs: Vec<_> = (0..32)
        .map(|i| {
            (
                synth::random_unit_field(8, stack.pixel_pitch(), 2000 + i),
                synth::random_unit_field(8, stack.pixel_pitch(), 3000 + i),
            )
        })
        .collect();
    let mut group = c.benchmark_group("bound_chain_32_pairs_n8_l2");
    group.bench_function("configured", |b| {
        b.iter(|| {
            exec::map(pairs.len(), |i| {
                diffstack::bound_chain(&stack, &pairs[i].0, &pairs[i].1).unwrap()
            })
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            exec::map_sequential(pairs.len(), |i| {
                diffstack::bound_chain(&stack, &pairs[i].0, &pairs[i].1).unwrap()
            })
        })
    });
    group.finish();
}

criterion_group!(benches, batch_forward, matrix_assembly, bound_chain_batch);
criterion_main!(benches);
