//! Prints `b1..b6`, `a2` and `a2/sqrt(lambda)` on a geometric cutoff grid.
//!
//! cargo run --release --example large_cutoff -- 1e2 1e8 13 [kappa] [rel_tol]

use massrenorm::asymptotics::geometric_grid;
use massrenorm::quadrature::a2_polar;
use massrenorm::{CutoffWindow, QuadratureSpec};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let (lo, hi, n) = (args[0], args[1], args[2] as usize);
    let kappa = args.get(3).copied().unwrap_or(0.0);
    let rel = args.get(4).copied().unwrap_or(1e-6);
    let spec = QuadratureSpec::polar_default().with_rel_tol(rel);
    println!("lambda,b1,b2,b3,b4,b5,b6,a2,a2_sqrt_scaled,converged");
    for l in geometric_grid(lo, hi, n).unwrap() {
        let w = CutoffWindow::new(l, kappa).unwrap();
        let p = a2_polar(&w, &spec).unwrap();
        let b: Vec<String> = p.terms.iter().map(|t| format!("{:.6e}", t.value)).collect();
        println!(
            "{:.3e},{},{:.6e},{:.6e},{}",
            l,
            b.join(","),
            p.a2.value,
            p.a2.value / l.sqrt(),
            p.a2.converged
        );
    }
}
