//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cubicwave::approx::{b_coeff, build_uk, c_coeff, cube_prefactor, ApproxCoefficients, FrequencyContext, DEFAULT_NF};
use cubicwave::bounds::{
    check_a_norm, check_alpha_caps, check_b_sum, check_fraction_inequality, check_gap_inequality, check_h_norm,
    check_j_bound, check_residue_norm, check_tail_sum, check_uk3_norm, check_uk_norm, contraction_certificate,
    certificate_inequalities, BoundReport, DEFAULT_LATTICE, DEFAULT_SCAN_DEPTH, J_SAMPLE,
};
use cubicwave::constants::targets;
use cubicwave::fixed_point::{iterate, IterationOptions, SolutionReport};
use cubicwave::operators::Problem;
use cubicwave::qroot::{admissible_cutoff, g, solve_q};
use cubicwave::spectral::{canonicalize, triple_product, ModeIndex, SpectralField, WeightConfig};
use cubicwave::timedomain::{initial_data, integrate_period_with, IntegrationOptions};

type Verdict = Result<(bool, String), String>;

struct Run {
    failures: usize,
}

impl Run {
    fn criterion(&mut self, id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) {
        let t = Instant::now();
        let res = f();
        let dt = t.elapsed();
        let (mut ok, mut detail) = match res {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(l) = limit {
            if dt > l {
                ok = false;
                detail.push_str(&format!("; exceeded {:.0?}", l));
            }
        }
        if !ok {
            self.failures += 1;
        }
        println!("{} {id:>2} {name}: {detail} [{:.2?}]", if ok { "PASS" } else { "FAIL" }, dt);
    }
}

fn all_pass(reports: &[BoundReport]) -> (bool, String) {
    let bad: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| format!("{} k={:?}", r.name, r.k)).collect();
    let tight = reports
        .iter()
        .min_by(|a, b| rel_margin(a).total_cmp(&rel_margin(b)))
        .map(|r| format!("tightest {} (measured {:.6e}, bound {:.6e})", r.name, r.measured, r.bound))
        .unwrap_or_default();
    if bad.is_empty() {
        (true, format!("{} reports, {tight}", reports.len()))
    } else {
        (false, format!("failed: {}", bad.join(", ")))
    }
}

fn rel_margin(r: &BoundReport) -> f64 {
    r.margin / r.bound.abs().max(f64::MIN_POSITIVE)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_field(rng: &mut ChaCha8Rng, w: WeightConfig, max: u32) -> SpectralField {
    let count = rng.random_range(1..=10);
    SpectralField::from_modes(
        w,
        (0..count).map(|_| (rng.random_range(0..=max), rng.random_range(0..=max), rng.random_range(-1.0..1.0))),
    )
}

fn main() {
    let mut run = Run { failures: 0 };
    let secs = Duration::from_secs;

    run.criterion(1, "q root", Some(secs(1)), || {
        let r = solve_q(1e-14).map_err(err)?;
        let gq = g(r.q, admissible_cutoff(r.q)).map_err(err)?.abs();
        let ok = r.q > 0.013 && r.q < 0.015 && (r.q - 0.014214).abs() <= 1e-6 && gq <= 1e-13;
        Ok((ok, format!("q = {:.12}, |g(q)| = {gq:.2e}", r.q)))
    });

    run.criterion(2, "convolution oracle", None, || {
        let w = WeightConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst: f64 = 0.0;
        let mut submult = true;
        for _ in 0..100 {
            let (u, v, z) = (random_field(&mut rng, w, 8), random_field(&mut rng, w, 8), random_field(&mut rng, w, 8));
            let p = triple_product(&u, &v, &z).map_err(err)?;
            for _ in 0..100 {
                let (tau, x) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..PI));
                let direct = u.evaluate(tau, x) * v.evaluate(tau, x) * z.evaluate(tau, x);
                worst = worst.max((p.evaluate(tau, x) - direct).abs());
            }
            submult &= p.norm() <= u.norm() * v.norm() * z.norm() * (1.0 + 1e-12);
        }
        Ok((worst <= 1e-10 && submult, format!("max error {worst:.2e}, submultiplicative {submult}")))
    });

    run.criterion(3, "closed-form coefficients", None, || {
        let ctx = FrequencyContext::new(100).map_err(err)?;
        let q = solve_q(1e-14).map_err(err)?.q;
        let c = ApproxCoefficients::build(q, DEFAULT_NF).map_err(err)?;
        let w = WeightConfig::default();
        let u = build_uk(&ctx, &c, w);
        let cube = triple_product(&u, &u, &u).map_err(err)?;
        let pre = cube_prefactor(&ctx);
        let mut worst_b: f64 = 0.0;
        for m in 0..=10 {
            for n in 0..=10 {
                let conv = cube.coeff(ModeIndex::new(m, n));
                let closed = pre * b_coeff(m, n, &c);
                worst_b = worst_b.max(((conv - closed) / closed).abs());
            }
        }
        // Λ P_{2,3} by convolution against Σ c_{μ,ν} P_{2+μ,3+ν}.
        let (m0, n0) = (2i64, 3i64);
        let p = SpectralField::mode(w, ModeIndex::new(m0 as u32, n0 as u32), 1.0);
        let conv = triple_product(&u, &u, &p).map_err(err)?;
        let mut expansion = SpectralField::zero(w);
        for mu in -30i64..=30 {
            for nu in -30i64..=30 {
                let (md, s) = canonicalize(m0 + mu, n0 + nu);
                let e = SpectralField::mode(w, md, s as f64 * c_coeff(mu, nu, &ctx, &c));
                expansion = expansion.add(&e).map_err(err)?;
            }
        }
        let mut worst_c: f64 = 0.0;
        for mu in -10i64..=10 {
            for nu in -10i64..=10 {
                let (md, _) = canonicalize(m0 + mu, n0 + nu);
                let (a, b) = (conv.coeff(md), expansion.coeff(md));
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    worst_c = worst_c.max((a - b).abs() / scale);
                }
            }
        }
        Ok((worst_b <= 1e-9 && worst_c <= 1e-9, format!("b rel {worst_b:.2e}, c rel {worst_c:.2e}")))
    });

    run.criterion(4, "norm bounds", Some(secs(10)), || {
        let mut reports = Vec::new();
        for k in [100, 1000, targets::THEOREM_K] {
            let pr = Problem::with_defaults(k).map_err(err)?;
            reports.extend(check_uk_norm(&pr));
            reports.push(check_uk3_norm(&pr).map_err(err)?);
            reports.push(check_residue_norm(&pr).map_err(err)?);
            if k == 100 {
                reports.push(check_b_sum(&pr.coeffs, pr.weight, 40));
            }
        }
        let positive = reports.iter().all(|r| r.margin > 0.0);
        let (ok, d) = all_pass(&reports);
        Ok((ok && positive, d))
    });

    run.criterion(5, "operator bounds at k = 100", Some(secs(60)), || {
        let pr = Problem::with_defaults(100).map_err(err)?;
        let mut reports = check_a_norm(&pr);
        let h = check_h_norm(&pr, DEFAULT_SCAN_DEPTH, DEFAULT_LATTICE).map_err(err)?;
        let columns = h.iter().filter(|r| r.name.starts_with("H_column_")).count();
        reports.extend(h);
        let modes: Vec<_> = J_SAMPLE.iter().map(|&(m, n)| ModeIndex::new(m, n)).collect();
        reports.push(check_j_bound(&pr, &modes, DEFAULT_LATTICE).map_err(err)?);
        let (ok, d) = all_pass(&reports);
        Ok((ok && columns == 16, format!("{columns} table columns; {d}")))
    });

    run.criterion(6, "integer inequalities", Some(secs(5)), || {
        let reports = vec![check_gap_inequality(10_000, 20_240_517).map_err(err)?, check_fraction_inequality(200, 50).map_err(err)?];
        Ok(all_pass(&reports))
    });

    run.criterion(7, "tail sum", Some(secs(5)), || {
        let pr = Problem::with_defaults(100).map_err(err)?;
        let mut reports = vec![check_tail_sum(&pr, 10, 400).map_err(err)?];
        reports.extend(check_alpha_caps(pr.coeffs.q, pr.weight));
        Ok(all_pass(&reports))
    });

    run.criterion(8, "contraction certificate", Some(secs(60)), || {
        let pr = Problem::with_defaults(targets::THEOREM_K).map_err(err)?;
        let cert = contraction_certificate(&pr, DEFAULT_SCAN_DEPTH, DEFAULT_LATTICE).map_err(err)?;
        let low = Problem::with_defaults(10_000).map_err(err)?;
        let at_low = certificate_inequalities(&low, DEFAULT_SCAN_DEPTH, DEFAULT_LATTICE).map_err(err)?;
        let ok = cert.contraction.pass && cert.ball_mapping.pass && !at_low.ball_mapping.pass;
        Ok((
            ok,
            format!(
                "k = {}: contraction {:.4} < 0.929, ball {:.7} < 1; k = 10000: ball {:.4} rejected = {}",
                cert.k, cert.contraction.measured, cert.ball_mapping.measured, at_low.ball_mapping.measured, !at_low.ball_mapping.pass
            ),
        ))
    });

    let mut solution: Option<SolutionReport> = None;
    run.criterion(9, "fixed-point solve at k = 79675", Some(secs(120)), || {
        let k = targets::THEOREM_K;
        let pr = Problem::with_defaults(k).map_err(err)?;
        let r = iterate(&pr, IterationOptions { tol: 1e-14, max_iter: 50, ..Default::default() }).map_err(err)?;
        let last = *r.increments.last().unwrap_or(&f64::NAN);
        let dist_limit = targets::DISTANCE.to_f64() / (k as f64).sqrt();
        let ok = r.iterations <= 50
            && last <= 1e-14
            && r.contraction <= 0.929
            && r.distance_to_uk < dist_limit
            && r.nontrivial
            && r.pde_residual <= 1e-12;
        let d = format!(
            "{} iterations, last increment {last:.1e}, contraction {:.3}, |Ah| {:.2e} < {dist_limit:.2e}, nontrivial {}, residual {:.1e}",
            r.iterations, r.contraction, r.distance_to_uk, r.nontrivial, r.pde_residual
        );
        solution = Some(r);
        Ok((ok, d))
    });

    run.criterion(10, "time-domain cross-check at k = 1000", None, || {
        let pr = Problem::with_defaults(1000).map_err(err)?;
        let r = iterate(&pr, IterationOptions::default()).map_err(err)?;
        let st = initial_data(&r.u, r.omega, 256).map_err(err)?;
        let a = integrate_period_with(&st, r.omega, IntegrationOptions { nt: 100_000, ..Default::default() }).map_err(err)?;
        let b = integrate_period_with(&st, r.omega, IntegrationOptions { nt: 200_000, ..Default::default() }).map_err(err)?;
        let ratio = a.return_error / b.return_error;
        let ok = a.return_error <= 1e-4 && a.energy_drift <= 1e-6 && (3.5..=4.5).contains(&ratio);
        Ok((ok, format!("return error {:.2e}, drift {:.2e}, halving ratio {ratio:.3}", a.return_error, a.energy_drift)))
    });

    run.criterion(11, "symmetry suite", None, || {
        let u = match &solution {
            Some(r) => r.u.clone(),
            None => iterate(&Problem::with_defaults(targets::THEOREM_K).map_err(err)?, IterationOptions::default()).map_err(err)?.u,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let (tau, x) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..PI));
            let v = u.evaluate(tau, x);
            worst = worst
                .max((u.evaluate(PI - tau, x) - v).abs())
                .max((u.evaluate(tau, PI - x) - v).abs())
                .max(u.evaluate(tau, 0.0).abs())
                .max(u.evaluate(tau, PI).abs());
        }
        Ok((worst <= 1e-12, format!("max defect {worst:.2e}")))
    });

    if run.failures > 0 {
        println!("{} criteria failed", run.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
