use passforge_core::backend::BackendModel;
use passforge_core::baselines::{brute_force_selective, default_toggles};
use passforge_core::circuit::generate::{benchmark_circuit, BenchmarkKind};

fn main() {
    let b = BackendModel::bundled_heavyhex_12();
    let cases = [
        (BenchmarkKind::Ghz, 4), (BenchmarkKind::Ghz, 5), (BenchmarkKind::Ghz, 6),
        (BenchmarkKind::Ghz, 8), (BenchmarkKind::Qft, 4), (BenchmarkKind::Qft, 5),
        (BenchmarkKind::Qft, 6), (BenchmarkKind::Qpe, 4), (BenchmarkKind::Qpe, 5),
        (BenchmarkKind::Qpe, 6), (BenchmarkKind::DeutschJozsa, 4),
        (BenchmarkKind::DeutschJozsa, 6), (BenchmarkKind::Grover, 2), (BenchmarkKind::Grover, 3),
    ];
    for (kind, n) in cases {
        let c = benchmark_circuit(kind, n).unwrap();
        let (_, rows) = brute_force_selective(&c, &b, &default_toggles()).unwrap();
        let best_esp = rows.iter().map(|r| r.esp).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<u32> = rows.iter().filter(|r| (r.esp - best_esp).abs() < 1e-12).map(|r| r.bitmask).collect();
        let fid = rows.iter().find(|r| r.bitmask == 31).unwrap().esp;
        println!("{kind:?}-{n}: best {best_esp:.5} fid {fid:.5} tied({}) {:?}", tied.len(),
                 tied.iter().map(|m| format!("{m:05b}")).collect::<Vec<_>>());
    }
}
