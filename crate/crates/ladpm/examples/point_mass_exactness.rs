//! Every deterministic sampler family recovers a point-mass target exactly
//! in ten steps, because the predicted clean sample is the target at every
//! step. Run with `cargo run --example point_mass_exactness`.

use ladpm::oracle::PointMassOracle;
use ladpm::samplers::{run_sampler, Method, SamplerConfig};
use ladpm::schedule::{Schedule, Spacing};

fn main() -> ladpm::Result<()> {
    let sched = Schedule::continuous_vp();
    let x0 = vec![0.6, -0.3];

    println!("target x0 = {x0:?}, N = 10 backward steps\n");
    println!("{:<14} {:>12}", "method", "max |error|");
    for (method, r) in [
        (Method::Ddim, 0),
        (Method::SPndm, 0),
        (Method::DpmSolver2, 0),
        (Method::DpmSolver3, 0),
        (Method::DeisTab, 1),
        (Method::DeisTab, 2),
        (Method::DeisTab, 3),
    ] {
        let mut cfg = SamplerConfig::new(method, 10);
        cfg.r = r;
        cfg.spacing = Spacing::UniformLogSnr;
        cfg.num_samples = 4;
        let x0c = x0.clone();
        let out = run_sampler(&cfg, &sched, &move |_| {
            Ok(Box::new(PointMassOracle::new(x0c.clone())))
        })?;
        let err = out
            .samples
            .samples()
            .iter()
            .flat_map(|s| s.iter().zip(&x0).map(|(&a, &b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let name = match method {
            Method::DeisTab => format!("deis-tab r={r}"),
            Method::Ddim => "ddim".into(),
            Method::SPndm => "s-pndm".into(),
            Method::DpmSolver2 => "dpm-solver2".into(),
            Method::DpmSolver3 => "dpm-solver3".into(),
            Method::Ddpm => "ddpm".into(),
        };
        println!("{name:<14} {err:>12.3e}");
    }
    Ok(())
}
