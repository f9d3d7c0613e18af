//! Closed-form optimal lookahead strength versus Monte-Carlo simulation
//! of the two-estimate process. Run with `cargo run --example optimal_lambda`.

use ladpm::analysis::{
    expected_sq_error, optimal_lambda, positivity_condition, simulate_assumption1,
    Assumption1Params,
};
use ladpm::stream::aux_stream;

fn main() -> ladpm::Result<()> {
    let p = Assumption1Params::new(0.9, 0.45, 0.1, 0.3, 1.0)?;
    let lambda_star = optimal_lambda(&p);

    println!("estimate process: gamma_i = 0.9, gamma_next = 0.45,");
    println!("                  phi_i = 0.1, phi_next = 0.3, |x|^2 = 1\n");
    println!("positive optimum predicted: {}", positivity_condition(&p));
    println!("closed-form optimal strength: {lambda_star:.6}\n");

    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let curve = simulate_assumption1(&p, &[1.0], &grid, 200_000, &mut aux_stream(13, 0))?;

    println!(
        "{:>8} {:>12} {:>12} {:>10}",
        "lambda", "closed form", "monte-carlo", "stderr"
    );
    for ((&lam, &mse), &se) in grid.iter().zip(&curve.mse).zip(&curve.stderr) {
        println!(
            "{lam:>8.2} {:>12.6} {mse:>12.6} {se:>10.6}",
            expected_sq_error(lam, &p)
        );
    }
    println!("\nempirical argmin: {:.2}", curve.argmin);
    Ok(())
}
