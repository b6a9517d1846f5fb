//! Rough per-point cost of the solver on a few domains, printed as
//! milliseconds and iteration counts. Run with --release.

use num_complex::Complex64 as C64;
use slitmap::geometry::{assemble_domain, make_circle};
use slitmap::mityuk::{MityukEngine, SlitSpec};
use slitmap::solver::{SolveMethod, SolverConfig};
use std::time::Instant;

fn main() {
    let cfg = SolverConfig { method: SolveMethod::Gmres, tol: 1e-13, max_iter: 300, restart: None };
    for &n in &[256usize, 1024] {
        let outer = make_circle(C64::new(0.0, 0.0), 1.0, true, n).unwrap();
        let inner = make_circle(C64::new(0.0, 0.0), 0.25, false, n).unwrap();
        let dom = assemble_domain(outer, vec![inner]).unwrap();
        let engine = MityukEngine::new(dom, SlitSpec::circular(1), cfg).unwrap();
        let t0 = Instant::now();
        let (res, mu) = engine.evaluate_warm(C64::new(0.5, 0.0), None, false).unwrap();
        let cold = t0.elapsed();
        let t1 = Instant::now();
        let (res2, _) = engine.evaluate_warm(C64::new(0.52, 0.0), Some(&mu), false).unwrap();
        let warm = t1.elapsed();
        println!(
            "annulus n={n}: cold {:.1} ms / {} iters, warm {:.1} ms / {} iters, R={:.12}",
            cold.as_secs_f64() * 1e3,
            res.iterations,
            warm.as_secs_f64() * 1e3,
            res2.iterations,
            res.radius
        );
    }

    let n = 1024;
    let outer = make_circle(C64::new(0.0, 0.0), 3.0, true, n).unwrap();
    let inners = vec![
        make_circle(C64::new(-1.5, 0.0), 1.0, false, n).unwrap(),
        make_circle(C64::new(1.5, 0.0), 1.0, false, n).unwrap(),
    ];
    let dom = assemble_domain(outer, inners).unwrap();
    let engine = MityukEngine::new(dom, SlitSpec::circular(2), cfg).unwrap();
    let t0 = Instant::now();
    let (res, mu) = engine.evaluate_warm(C64::new(0.0, 1.5), None, false).unwrap();
    let cold = t0.elapsed();
    let t1 = Instant::now();
    let (res2, _) = engine.evaluate_warm(C64::new(0.05, 1.5), Some(&mu), false).unwrap();
    let warm = t1.elapsed();
    println!(
        "three circles n={n}: cold {:.1} ms / {} iters, warm {:.1} ms / {} iters, R={:.12}",
        cold.as_secs_f64() * 1e3,
        res.iterations,
        warm.as_secs_f64() * 1e3,
        res2.iterations,
        res.radius
    );
}
