//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails. Pass criterion ids (`AC1`, ...) as
//! arguments to run a subset.

use std::f64::consts::PI;
use std::time::Instant;

use grating_core::bem::{MeshOptions, Solver};
use grating_core::optim::{armijo, estimate_rate, minimize, GratingObjective, LineSearchParams, Method, Objective, ObjectiveKind, OptimizerConfig, Tolerances};
use grating_core::shapegrad::{efficiency_derivatives, finite_differences, FD_GRADIENT_STEP, FD_HESSIAN_STEP};
use grating_core::{GratingProfile, IncidentWave, Result as CoreResult};
use grating_experiments::config::{MethodName, ProfileConfig};
use grating_experiments::runs::{self, OptimizeReport};
use grating_experiments::ExperimentConfig;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAIRS: [(f64, f64); 3] = [(20.0, 0.0), (30.0, PI / 4.0), (20.0, 5.0 * PI / 36.0)];

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn solver(k: f64, theta: f64, options: MeshOptions) -> Solver {
    Solver::new(IncidentWave::new(k, theta).unwrap(), 1.0, options).unwrap()
}

fn random_profile(rng: &mut ChaCha8Rng, modes: usize) -> GratingProfile {
    let mut c = || (0..modes).map(|_| rng.gen_range(-0.05..=0.05)).collect::<Vec<f64>>();
    let (s, k) = (c(), c());
    GratingProfile::new(1.0, s, k).unwrap()
}

fn balance_error(s: &mut Solver, p: &GratingProfile) -> f64 {
    (s.solve(p).unwrap().diffraction().energy_balance() - 1.0).abs()
}

fn ac1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let coarse = |per_wavelength| MeshOptions { per_wavelength, min_elements: 8, ..MeshOptions::default() };
    let (mut worst, mut min_order, mut measured) = (0.0f64, f64::INFINITY, 0);
    for i in 0..20 {
        let modes = rng.gen_range(1..=5);
        let p = random_profile(&mut rng, modes);
        let (k, theta) = PAIRS[i % 3];
        worst = worst.max(balance_error(&mut solver(k, theta, MeshOptions::default()), &p));
        let e4 = balance_error(&mut solver(k, theta, coarse(4.0)), &p);
        let e8 = balance_error(&mut solver(k, theta, coarse(8.0)), &p);
        // below 1e-11 the finer level is at round-off and the ratio says nothing
        if e8 > 1e-11 {
            min_order = min_order.min((e4 / e8).log2());
            measured += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-3 && measured > 0 && min_order >= 2.0 && secs <= 120.0,
        format!("max |sum e - 1| = {worst:.2e}, min order {min_order:.2} over {measured} profiles, {secs:.0} s"),
    )
}

fn ac2() -> Check {
    let mut worst = 0.0f64;
    for (k, theta) in PAIRS {
        let d = solver(k, theta, MeshOptions::default()).solve(&GratingProfile::flat(1.0)).unwrap().diffraction();
        for (n, e) in d.modes.iter().zip(&d.efficiencies) {
            worst = worst.max(if *n == 0 { (e - 1.0).abs() } else { *e });
        }
    }
    check(worst <= 1e-4, format!("max deviation {worst:.2e}"))
}

fn ac3() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut g_err, mut h_err, mut asym) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..10 {
        let p = random_profile(&mut rng, 3);
        let (k, theta) = PAIRS[i % 3];
        let n = if i % 2 == 0 { 1 } else { -1 };
        let mut s = solver(k, theta, MeshOptions::default());
        let mesh = s.mesh(&p, None);
        let elements = mesh.elements();
        let d = efficiency_derivatives(&s.solve_mesh(mesh).unwrap(), n, true).unwrap();
        let fd = finite_differences(&mut s, &p, elements, n, FD_GRADIENT_STEP, Some(FD_HESSIAN_STEP)).unwrap();
        let (h, hf) = (d.hessian.unwrap(), fd.hessian.unwrap());
        g_err = g_err.max((&d.gradient - &fd.gradient).norm() / fd.gradient.norm());
        h_err = h_err.max((&h - &hf).amax() / hf.amax());
        asym = asym.max(d.asymmetry);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        g_err <= 1e-4 && h_err <= 1e-3 && asym <= 1e-6 && secs <= 300.0,
        format!("gradient {g_err:.2e}, Hessian {h_err:.2e}, asymmetry {asym:.1e}, {secs:.0} s"),
    )
}

fn optimize(toml: &str, method: &str, seed: u64) -> OptimizeReport {
    let mut config = ExperimentConfig::from_toml(toml).unwrap();
    config.method.name = match method {
        "gd" => MethodName::Gd,
        "newton" => MethodName::Newton,
        "newton_m" => MethodName::NewtonM,
        "bfgs_id" => MethodName::BfgsId,
        _ => MethodName::BfgsH,
    };
    config.method.seed = seed;
    runs::optimize(&config).unwrap()
}

const TARGET_65: &str = "[physics]\nwavenumber = 30.0\nincidence_angle = 0.7853981633974483\n\
    [objective]\nkind = \"target\"\nmode = 1\ntarget = 0.65\n[parametrization]\nmodes = 5\n\
    [tolerances]\ngradient = 1e-14\n";
const TARGET_60: &str = "[physics]\nwavenumber = 40.0\nincidence_angle = 0.5235987755982988\n\
    [objective]\nkind = \"target\"\nmode = -1\ntarget = 0.6\n[parametrization]\nmodes = 5\n\
    [tolerances]\ngradient = 1e-14\n";

// Seeds tried in order, per method, until three runs converge.
const RATE_SEEDS: [(&str, &[u64]); 2] =
    [(TARGET_60, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]), (TARGET_65, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10])];

fn ac4() -> Check {
    let start = Instant::now();
    let bands: [(&str, fn(f64) -> bool); 4] = [
        ("gd", |q| (0.8..=1.3).contains(&q)),
        ("newton", |q| q >= 1.7),
        ("bfgs_id", |q| q > 1.2 && q < 2.0),
        ("bfgs_h", |q| q > 1.2 && q < 2.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (method, band) in bands {
        let mut rates = Vec::new();
        let mut skipped = Vec::new();
        'configs: for (c, (toml, seeds)) in RATE_SEEDS.iter().enumerate() {
            for &seed in seeds.iter() {
                if rates.len() >= 3 {
                    break 'configs;
                }
                let r = optimize(toml, method, seed);
                match (r.converged, r.rate) {
                    (true, Some(q)) => rates.push(q),
                    _ => skipped.push(format!("{}/{seed}", ["k40", "k30"][c])),
                }
            }
        }
        let ok = rates.len() >= 3 && rates.iter().all(|q| band(*q));
        pass &= ok;
        let qs: Vec<String> = rates.iter().map(|q| format!("{q:.2}")).collect();
        parts.push(format!("{method} q=[{}] non-converged {}", qs.join(", "), skipped.join(" ")));
    }
    let secs = start.elapsed().as_secs_f64();
    check(pass && secs <= 900.0, format!("{}; {secs:.0} s", parts.join("; ")))
}

const MAXIMIZE: [&str; 2] = [
    "[physics]\nwavenumber = 20.0\nincidence_angle = 0.4363323129985824\n\
     [objective]\nkind = \"maximize\"\nmode = 1\n[parametrization]\nmodes = 4\n",
    "[physics]\nwavenumber = 30.0\nincidence_angle = 0.7853981633974483\n\
     [objective]\nkind = \"maximize\"\nmode = -1\n[parametrization]\nmodes = 4\n",
];
const ORDERING_SEED: u64 = 1;

fn ac5() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for toml in MAXIMIZE {
        let its: Vec<(usize, f64)> = ["gd", "newton", "newton_m"]
            .iter()
            .map(|m| {
                let r = optimize(toml, m, ORDERING_SEED);
                (r.iterations_to_tolerance, r.efficiency)
            })
            .collect();
        pass &= its[1].0 < its[0].0 && its[2].0 < its[0].0;
        parts.push(format!(
            "gd {} (e={:.3}), newton {} (e={:.3}), newton_m2 {} (e={:.3})",
            its[0].0, its[0].1, its[1].0, its[1].1, its[2].0, its[2].1
        ));
    }
    check(pass, parts.join("; "))
}

const LITTROW: &str = "[physics]\nwavelength = 300.0\nperiod = 1667.0\nlittrow_order = 1\n\
    [objective]\nkind = \"maximize\"\nmode = 1\n[parametrization]\nmodes = 5\n";

fn ac6() -> Check {
    let mut tried = Vec::new();
    for seed in 1..=10 {
        let r = optimize(LITTROW, "newton", seed);
        tried.push(format!("{seed}:{:.3}", r.efficiency));
        if r.efficiency >= 0.80 {
            let mut config = ExperimentConfig::from_toml(LITTROW).unwrap();
            config.profile = Some(ProfileConfig {
                sin: Some(r.profile.sin_coefficients().to_vec()),
                cos: Some(r.profile.cos_coefficients().to_vec()),
                file: None,
            });
            let p = runs::perturb(&config, 0.05).unwrap();
            let drop = (r.efficiency - p.worst()).abs();
            return check(
                drop <= 0.05 && r.seconds <= 600.0,
                format!(
                    "seed {seed}: e_1 = {:.4} in {:.0} s, 5 % worst case {:.4} (drop {drop:.4})",
                    r.efficiency, r.seconds, p.worst()
                ),
            );
        }
    }
    check(false, format!("no seed reached 0.80: {}", tried.join(" ")))
}

struct Saddle;

impl Objective for Saddle {
    fn dimension(&self) -> usize {
        2
    }
    fn value(&mut self, x: &DVector<f64>) -> CoreResult<f64> {
        Ok(x[0] * x[0] - x[1] * x[1])
    }
    fn gradient(&mut self, x: &DVector<f64>) -> CoreResult<(f64, DVector<f64>)> {
        Ok((self.value(x)?, DVector::from_vec(vec![2.0 * x[0], -2.0 * x[1]])))
    }
    fn hessian(&mut self, x: &DVector<f64>) -> CoreResult<(f64, DVector<f64>, DMatrix<f64>)> {
        let (f, g) = self.gradient(x)?;
        Ok((f, g, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0])))
    }
}

fn ac7() -> Check {
    let one_step = OptimizerConfig {
        tolerances: Tolerances { max_iterations: 1, ..Tolerances::default() },
        ..OptimizerConfig::new(Method::Newton)
    };
    let r = minimize(&mut Saddle, &DVector::from_vec(vec![1.0, 1.0]), &one_step).unwrap();
    let x1 = &r.trace[1].x;
    let saddle = (x1[0] - 0.0).abs().max((x1[1] - 2.0).abs());

    // f = x1^2 + x2^2 from (1, 0) along -grad: h = 1 reaches (-1, 0) with f = 1
    struct Bowl;
    impl Objective for Bowl {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&mut self, x: &DVector<f64>) -> CoreResult<f64> {
            Ok(x.norm_squared())
        }
        fn gradient(&mut self, x: &DVector<f64>) -> CoreResult<(f64, DVector<f64>)> {
            Ok((x.norm_squared(), x * 2.0))
        }
        fn hessian(&mut self, x: &DVector<f64>) -> CoreResult<(f64, DVector<f64>, DMatrix<f64>)> {
            Ok((x.norm_squared(), x * 2.0, DMatrix::identity(2, 2) * 2.0))
        }
    }
    let x = DVector::from_vec(vec![1.0, 0.0]);
    let g = &x * 2.0;
    let step = armijo(&mut Bowl, &x, 1.0, &g, &g, &LineSearchParams::default()).unwrap();
    let armijo_err = (step.h - 0.5).abs().max(step.x.norm());

    let seq = |v: Vec<f64>| v.into_iter().map(|x| DVector::from_element(1, x)).collect::<Vec<_>>();
    let linear = seq((0..8).map(|t| 2f64.powi(-t)).collect());
    let quadratic = seq((0..6).map(|t| (0..t).map(|s| 2f64.powi(-(1 << s))).sum()).collect());
    let q1 = (estimate_rate(&linear).unwrap() - 1.0).abs();
    let q2 = (estimate_rate(&quadratic).unwrap() - 2.0).abs();
    let worst = saddle.max(armijo_err).max(q1).max(q2);
    check(
        worst <= 1e-12,
        format!("saddle {saddle:.1e}, Armijo {armijo_err:.1e}, q=1 {q1:.1e}, q=2 {q2:.1e}"),
    )
}

fn ac8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let modes = 4;
    let s = solver(20.0, 5.0 * PI / 36.0, MeshOptions::default());
    let mut obj = GratingObjective::new(s, ObjectiveKind::Maximize { mode: 1 }, modes);
    let mut point = || DVector::from_vec(random_profile(&mut rng, modes).variables());
    let before = obj.solver().stats();
    obj.gradient(&point()).unwrap();
    let after_g = obj.solver().stats();
    obj.hessian(&point()).unwrap();
    let after_h = obj.solver().stats();
    let g = (after_g.solves() - before.solves(), after_g.factorizations - before.factorizations);
    let h = (after_h.solves() - after_g.solves(), after_h.factorizations - after_g.factorizations);
    check(
        g == (2, 1) && h == (2 + 2 * modes, 1),
        format!("gradient: {} solves / {} factorization; Hessian (N = {modes}): {} solves / {} factorization", g.0, g.1, h.0, h.1),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let criteria: [(&str, &str, fn() -> Check); 8] = [
        ("AC1", "energy conservation", ac1),
        ("AC2", "flat mirror", ac2),
        ("AC3", "derivatives vs finite differences", ac3),
        ("AC4", "convergence rates", ac4),
        ("AC5", "iteration-count ordering", ac5),
        ("AC6", "Littrow design", ac6),
        ("AC7", "optimizer oracles", ac7),
        ("AC8", "cost contract", ac8),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let c = run();
        println!("{id} {} {name}: {}", if c.pass { "PASS" } else { "FAIL" }, c.detail);
        failed += usize::from(!c.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
