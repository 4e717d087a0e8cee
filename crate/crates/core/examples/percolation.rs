//! Prints connectivity and susceptibility across densities for a small ensemble.
//!
//! cargo run --release -p qkdnet --example percolation -- 2000 20

use qkdnet::experiment::{run_scan, ExperimentConfig, GridSpec, ScanKind, ScanSpec};
use qkdnet::qkdnet::ProtocolKind;

fn main() -> qkdnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let realizations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let kind = match args.next().as_deref() {
        Some("dv") => ProtocolKind::Dv,
        Some("hybrid") => ProtocolKind::Hybrid,
        _ => ProtocolKind::Cv,
    };

    let mut cfg = ExperimentConfig::new(ScanSpec::new(
        ScanKind::Susceptibility,
        GridSpec::Log { min: 1e-6, max: 1e-2, points: 17 },
    ));
    cfg.model.n_nodes = n;
    cfg.policy.kind = kind;
    cfg.realizations = Some(realizations);

    let t = std::time::Instant::now();
    let res = run_scan(&cfg)?;
    let conn = res.mean_by_grid(kind, |r| r.connectivity);
    let chi = res.susceptibility_curve(kind)?;
    println!("{:>12} {:>12} {:>12}", "rho", "connectivity", "chi");
    for ((rho, c), (_, x)) in conn.iter().zip(&chi) {
        println!("{rho:>12.3e} {c:>12.4} {x:>12.3}");
    }
    eprintln!("{:.1} s", t.elapsed().as_secs_f64());
    Ok(())
}
