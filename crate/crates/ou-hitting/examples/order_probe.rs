// temporary probe: Abel-regime relative error vs magnitude
use ou_hitting::density::nu_forward;
use ou_hitting::model;
use ou_hitting::volterra::abel_nu_forward;

fn main() {
    let theta_end = model::theta_of_t(0.02).unwrap();
    for n in [512usize, 2048] {
        let nu = nu_forward(1.0, 0.5, n, theta_end).unwrap();
        println!("N = {n}:");
        let mut last_bad = (0.0, 0.0);
        for (i, &th) in nu.grid.nodes.iter().enumerate() {
            let exact = abel_nu_forward(th, 1.0, 0.5);
            if exact.abs() < 1e-300 { continue; }
            let rel = ((nu.values[i] - exact) / exact).abs();
            if rel > 1e-2 { last_bad = (th, exact.abs()); }
        }
        println!("  last >1% node: theta={:.5} |nu|={:.3e}", last_bad.0, last_bad.1);
        for &mag in &[1e-15f64, 1e-10, 1e-8, 1e-6, 1e-4] {
            let mut worst = 0.0f64;
            for (i, &th) in nu.grid.nodes.iter().enumerate() {
                let exact = abel_nu_forward(th, 1.0, 0.5);
                if exact.abs() < mag { continue; }
                worst = worst.max(((nu.values[i] - exact) / exact).abs());
            }
            println!("  guard {mag:.0e}: worst rel {worst:.3e}");
        }
    }
}
