//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sma_safety::pose::{pair_map, piaw_step, pose_controller_step, sat};
use sma_safety::safety::{check_invariance, safety_errors, supervise_step, u_max};
use sma_safety::sim::run_scenario;
use sma_safety::thermal::{build_block_system, fit_lumped, simulate_trace, step_block, AugmentedState};
use sma_safety::{BlockLinearSystem, LumpedThermalParams, PiawGains, PiawState, PoseState, SafetyConfig, ThermalBlock};
use sma_safety_cli::parse_scenario;
use sma_safety_cli::synth::noisy_trace;

const GAMMAS: [f64; 3] = [0.1, 0.2, 0.5];
const BIN: &str = env!("CARGO_BIN_EXE_sma-safety");

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_params(r: &mut ChaCha8Rng) -> LumpedThermalParams {
    LumpedThermalParams::new(r.gen_range(0.5..0.99), r.gen_range(0.5..20.0), r.gen_range(0.0..5.0)).unwrap()
}

fn balancing() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/balancing.toml")
}

/// Request patterns that push the supervisor: full heat, noise, long
/// bang-bang bursts and random on/off.
fn adversarial(pattern: usize, k: usize, r: &mut ChaCha8Rng) -> f64 {
    match pattern {
        0 => 1.0,
        1 => r.gen_range(0.0..=1.0),
        2 => ((k / 137) % 2) as f64,
        _ => f64::from(u8::from(r.gen_bool(0.7))),
    }
}

fn invariance_suite() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = f64::NEG_INFINITY;
    let mut uncertified = 0;
    for s in 0..200 {
        let m = 10;
        let params: Vec<_> = (0..m).map(|_| random_params(&mut r)).collect();
        let sys = build_block_system(&params).unwrap();
        let hottest = params.iter().map(|p| p.ambient()).fold(f64::NEG_INFINITY, f64::max);
        let cfg = SafetyConfig::new(hottest + r.gen_range(5.0..80.0), GAMMAS[s % 3]).unwrap();
        if !check_invariance(&sys, &cfg).holds {
            uncertified += 1;
        }
        let temps: Vec<f64> = params
            .iter()
            .map(|p| r.gen_range(p.ambient() - 5.0..=cfg.t_max()))
            .collect();
        let mut x = AugmentedState::from_temps(&temps);
        let pattern = s % 4;
        let mut v = vec![0.0; m];
        for k in 0..10_000 {
            v.iter_mut().for_each(|vi| *vi = adversarial(pattern, k, &mut r));
            x = supervise_step(&sys, &x, &v, &cfg).unwrap().next;
            for xi in &x {
                worst = worst.max(xi.temp() - cfg.t_max());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-9 && uncertified == 0 && secs <= 60.0,
        format!("200 scenarios x 1e4 steps, max(T - t_max) = {worst:.3e}, {secs:.1} s"),
    )
}

fn error_recursion() -> Outcome {
    let mut r = rng(2);
    let (mut stated, mut observed) = (0.0_f64, 0.0_f64);
    for _ in 0..100_000 {
        let p = random_params(&mut r);
        let sys = build_block_system(&[p]).unwrap();
        let cfg = SafetyConfig::new(p.ambient() + r.gen_range(5.0..80.0), GAMMAS[r.gen_range(0..3)]).unwrap();
        let x = AugmentedState::from_temps(&[r.gen_range(p.ambient() - 20.0..=cfg.t_max())]);
        let blk = sys.block(0);
        let um = u_max(&sys, &x, &cfg).unwrap()[0];
        let e0 = safety_errors(&x, &cfg)[0].as_vec2();
        let e1 = blk.apply(x[0].as_vec2(), um) - cfg.x_max(0);
        stated = stated.max((e1 - blk.a().scale(cfg.gamma()) * e0).max_abs());
        observed = observed.max((e1 - blk.a().scale(1.0 - cfg.gamma()) * e0).max_abs());
    }
    Outcome::new(
        stated < 1e-9,
        format!(
            "1e5 states, max |e(k+1) - gamma A e(k)| = {stated:.3e}; \
             max |e(k+1) - (1 - gamma) A e(k)| = {observed:.3e}"
        ),
    )
}

/// `gamma B^T (B B^T)^+ (x_set - A x)` with every matrix written out.
fn bound_by_matrices(p: &LumpedThermalParams, gamma: f64, t_max: f64, temp: f64) -> f64 {
    let a = [[p.a1, p.a3], [0.0, 1.0]];
    let b = [p.a2, 0.0];
    let x_max = [t_max, 1.0];
    let mul = |m: [[f64; 2]; 2], v: [f64; 2]| [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
    let shaped = [
        [1.0 - (1.0 - gamma) * a[0][0], -(1.0 - gamma) * a[0][1]],
        [-(1.0 - gamma) * a[1][0], 1.0 - (1.0 - gamma) * a[1][1]],
    ];
    let sx = mul(shaped, x_max);
    let x_set = [sx[0] / gamma, sx[1] / gamma];
    let ax = mul(a, [temp, 1.0]);
    let resid = [x_set[0] - ax[0], x_set[1] - ax[1]];
    let bbt = [[b[0] * b[0], b[0] * b[1]], [b[1] * b[0], b[1] * b[1]]];
    let pinv = [[1.0 / bbt[0][0], 0.0], [0.0, 0.0]];
    let w = mul(pinv, resid);
    gamma * (b[0] * w[0] + b[1] * w[1])
}

fn boundary_holding_input() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let p = random_params(&mut r);
        let sys = build_block_system(&[p]).unwrap();
        let cfg = SafetyConfig::new(p.ambient() + r.gen_range(5.0..80.0), GAMMAS[r.gen_range(0..3)]).unwrap();
        let closed = ((1.0 - p.a1) * cfg.t_max() - p.a3) / p.a2;
        let got = u_max(&sys, &AugmentedState::from_temps(&[cfg.t_max()]), &cfg).unwrap()[0];
        let oracle = bound_by_matrices(&p, cfg.gamma(), cfg.t_max(), cfg.t_max());
        worst = worst.max((got - closed).abs()).max((oracle - closed).abs());
    }
    Outcome::new(worst < 1e-12, format!("1e3 draws, max deviation {worst:.3e}"))
}

/// Draws nonpositive errors with magnitudes spread over eight decades per
/// component and reports whether `gamma A` keeps them nonpositive.
fn orthant_oracle(a: [[f64; 2]; 2], gamma: f64, samples: usize, r: &mut ChaCha8Rng) -> bool {
    (0..samples).all(|_| {
        let mut e = [0.0; 2];
        for c in &mut e {
            *c = -10f64.powf(r.gen_range(-6.0..2.0)) * r.gen::<f64>();
        }
        (0..2).all(|row| gamma * (a[row][0] * e[0] + a[row][1] * e[1]) <= 0.0)
    })
}

fn certificate_vs_oracle() -> Outcome {
    let mut r = rng(4);
    let mut agree = 0;
    for model in 0..100 {
        let m = r.gen_range(1..=4);
        let mut coeffs: Vec<(f64, f64, f64)> = (0..m)
            .map(|_| {
                let p = random_params(&mut r);
                (p.a1, p.a2, p.a3)
            })
            .collect();
        if model >= 80 {
            let i = r.gen_range(0..m);
            if model % 2 == 0 {
                coeffs[i].2 = -r.gen_range(0.01..5.0);
            } else {
                coeffs[i].0 = -r.gen_range(0.01..0.9);
            }
        }
        let blocks: Vec<_> = coeffs
            .iter()
            .map(|&(a1, a2, a3)| ThermalBlock::from_coefficients(a1, a2, a3).unwrap())
            .collect();
        let gamma = GAMMAS[r.gen_range(0..3)];
        let oracle = blocks.iter().all(|b| orthant_oracle(b.a().0, gamma, 100_000, &mut r));
        let sys = BlockLinearSystem::from_blocks(blocks).unwrap();
        let cert = check_invariance(&sys, &SafetyConfig::new(200.0, gamma).unwrap());
        if cert.holds == oracle && (model >= 80) != cert.holds {
            agree += 1;
        }
    }
    Outcome::new(agree == 100, format!("{agree}/100 models agree (20 crafted negatives)"))
}

fn calibration() -> Outcome {
    let mut r = rng(5);
    let mut worst_resid = 0.0_f64;
    let mut worst_param = 0.0_f64;
    for _ in 0..20 {
        let p = random_params(&mut r);
        let inputs: Vec<f64> = (0..500).map(|_| r.gen_range(0.0..=1.0)).collect();
        let fit = fit_lumped(&simulate_trace(&p, p.ambient(), &inputs).unwrap()).unwrap();
        worst_resid = worst_resid.max(fit.residual_rms);
        for (got, want) in [(fit.params.a1, p.a1), (fit.params.a2, p.a2), (fit.params.a3, p.a3)] {
            worst_param = worst_param.max((got - want).abs());
        }
    }
    let p = LumpedThermalParams::new(0.6, 30.0, 8.0).unwrap();
    let noisy = fit_lumped(&noisy_trace(&p, p.ambient(), 2000, 0.1, 20_240_731)).unwrap();
    let rel = [
        (noisy.params.a1, p.a1),
        (noisy.params.a2, p.a2),
        (noisy.params.a3, p.a3),
    ]
    .iter()
    .map(|(g, w)| ((g - w) / w).abs())
    .fold(0.0, f64::max);
    Outcome::new(
        worst_resid < 1e-9 && worst_param < 1e-8 && rel < 0.01,
        format!(
            "noiseless residual {worst_resid:.3e}, param error {worst_param:.3e}; \
             noisy max relative error {:.3}%",
            100.0 * rel
        ),
    )
}

fn monotonicity() -> Outcome {
    let mut r = rng(6);
    let mut violations = 0;
    for _ in 0..100_000 {
        let m = r.gen_range(1..=10);
        let params: Vec<_> = (0..m).map(|_| random_params(&mut r)).collect();
        let sys = build_block_system(&params).unwrap();
        let lo_t: Vec<f64> = (0..m).map(|_| r.gen_range(0.0..100.0)).collect();
        let hi_t: Vec<f64> = lo_t.iter().map(|t| t + r.gen_range(0.0..30.0)).collect();
        let lo_u: Vec<f64> = (0..m).map(|_| r.gen_range(0.0..=1.0)).collect();
        let hi_u: Vec<f64> = lo_u
            .iter()
            .map(|&u: &f64| (u + r.gen_range(0.0..=1.0)).min(1.0))
            .collect();
        let lo = step_block(&sys, &AugmentedState::from_temps(&lo_t), &lo_u).unwrap();
        let hi = step_block(&sys, &AugmentedState::from_temps(&hi_t), &hi_u).unwrap();
        if lo.iter().zip(&hi).any(|(a, b)| a.temp() > b.temp()) {
            violations += 1;
        }
    }
    Outcome::new(violations == 0, format!("1e5 ordered pairs, {violations} violations"))
}

fn balancing_scenario() -> Outcome {
    let start = Instant::now();
    let scenario = parse_scenario(&balancing()).unwrap();
    let log = run_scenario(&scenario).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rows = log.rows();
    let t_max = scenario.safety.t_max();

    let converged = |row: &sma_safety::sim::TraceRow<f64>| {
        row.theta
            .iter()
            .zip(&row.setpoint)
            .all(|(th, sp)| (th - sp).abs() <= 0.02 * sp.abs())
    };
    let before = rows.iter().rev().find(|r| r.t < 40.0).unwrap();
    let after = rows.last().unwrap();
    let angles = converged(before) && converged(after);
    let engaged = rows
        .iter()
        .filter(|r| (40.0..=77.0).contains(&r.t))
        .any(|r| r.active.iter().any(|&a| a));
    let hottest = rows
        .iter()
        .flat_map(|r| r.temps.iter().map(|t| t - t_max))
        .fold(f64::NEG_INFINITY, f64::max);
    let foot_gap = (before.foot_height - after.foot_height).abs();
    Outcome::new(
        angles && engaged && hottest <= 1e-9 && foot_gap <= 1e-6 && secs <= 5.0,
        format!(
            "angles converged {angles}, supervisor engaged {engaged}, max(T - t_max) = {hottest:.3e}, \
             foot height {:.6} m vs {:.6} m (gap {foot_gap:.2e}), {secs:.2} s",
            before.foot_height, after.foot_height
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let traces: Vec<Vec<u8>> = ["a.csv", "b.csv"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let status = Command::new(BIN)
                .arg("simulate")
                .arg(balancing())
                .arg("-o")
                .arg(&out)
                .output()
                .unwrap()
                .status;
            assert!(status.success());
            std::fs::read(out).unwrap()
        })
        .collect();
    Outcome::new(
        !traces[0].is_empty() && traces[0] == traces[1],
        format!("two runs, {} bytes each", traces[0].len()),
    )
}

fn piaw_suite() -> Outcome {
    let mut r = rng(9);
    let mut failures = Vec::new();

    let pure_p = (0..10_000).all(|_| {
        let k_p = r.gen_range(0.0..10.0);
        let g = PiawGains::new(k_p, 0.0, r.gen_range(-2.0..2.0), 0.1).unwrap();
        let eta = r.gen_range(-5.0..5.0);
        let s = PiawState {
            acc: r.gen_range(-50.0..50.0),
            last_eta: eta,
            last_mu: sat(eta),
        };
        let d: f64 = r.gen_range(-2.0..2.0);
        let o = piaw_step(&g, &s, d).unwrap();
        o.eta == k_p * d && o.mu == sat(k_p * d)
    });
    if !pure_p {
        failures.push("pure-P");
    }

    let g = PiawGains::new(2.0, 0.0, 0.0, 0.1).unwrap();
    let boundary = [(0.5, 1.0), (-0.5, -1.0), (0.75, 1.0), (-0.75, -1.0)]
        .iter()
        .all(|&(d, mu)| piaw_step(&g, &PiawState::default(), d).unwrap().mu == mu)
        && pair_map(1.0).unwrap() == (1.0, 0.0)
        && pair_map(-1.0).unwrap() == (0.0, 1.0)
        && pair_map(1.0 + f64::EPSILON).is_err()
        && pair_map(-1.0 - f64::EPSILON).is_err();
    if !boundary {
        failures.push("saturation boundary");
    }

    let mut equivalent = true;
    let mut diverged_after = 0;
    for _ in 0..1000 {
        let k_p = r.gen_range(0.1..5.0);
        let k_i = r.gen_range(0.1..5.0);
        let plain = PiawGains::new(k_p, k_i, 0.0, 0.1).unwrap();
        let aw = PiawGains::new(k_p, k_i, r.gen_range(0.1..3.0), 0.1).unwrap();
        let (mut sp, mut sa) = (PiawState::default(), PiawState::default());
        let mut saturated = false;
        for _ in 0..300 {
            let d = r.gen_range(-0.5..0.5);
            let (op, oa) = (piaw_step(&plain, &sp, d).unwrap(), piaw_step(&aw, &sa, d).unwrap());
            if saturated {
                if op != oa {
                    diverged_after += 1;
                }
                break;
            }
            equivalent &= op == oa;
            saturated = op.eta != op.mu;
            sp = op.state;
            sa = oa.state;
        }
    }
    if !equivalent || diverged_after == 0 {
        failures.push("k_a = 0 equivalence until saturation");
    }

    let exclusive = (0..10_000).all(|_| {
        let theta: Vec<f64> = (0..5).map(|_| r.gen_range(-1.5..1.5)).collect();
        let target: Vec<f64> = (0..5).map(|_| r.gen_range(-1.5..1.5)).collect();
        let gains = vec![PiawGains::new(r.gen_range(0.0..10.0), r.gen_range(0.0..5.0), 0.5, 0.1).unwrap(); 5];
        let states = vec![PiawState::default(); 5];
        let (v, next) = pose_controller_step(&gains, &states, &PoseState::new(theta), &PoseState::new(target)).unwrap();
        (0..5).all(|j| {
            let (plus, minus) = (v[2 * j], v[2 * j + 1]);
            (plus == 0.0 || minus == 0.0) && plus - minus == next[j].last_mu && plus >= 0.0 && minus >= 0.0
        })
    });
    if !exclusive {
        failures.push("channel exclusivity");
    }

    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("pure-P, saturation, k_a equivalence ({diverged_after} post-saturation divergences), exclusivity")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("invariance under adversarial requests", invariance_suite),
        ("supervisor error recursion", error_recursion),
        ("boundary holding input", boundary_holding_input),
        ("certificate vs sampling oracle", certificate_vs_oracle),
        ("calibration round trip", calibration),
        ("monotonicity", monotonicity),
        ("balancing scenario", balancing_scenario),
        ("determinism", determinism),
        ("PIAW suite", piaw_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {}: {verdict} {name} ({}; {:.2} s)",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
