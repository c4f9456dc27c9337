//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use polycond::condition::{l_min, l_min_with, plant_double_root, LMinOptions, UnitPair};
use polycond::diophantine::{lcd_estimate, small_ball_estimate, tensorization_check, EtaMode, LcdQuery};
use polycond::ensembles::{make_kss, sample_system, DistributionSpec, Purpose, SeedPolicy};
use polycond::geometry::{classify, CompressibilityParams, VectorClass};
use polycond::harness::{run_example1, run_tail, ExperimentConfig, Model, OptimizerKnobs};
use polycond::opnorm::{opnorm, opnorm_scaling, IndexRange, OpnormOptions};
use polycond::stats::loglog_slope;
use polycond::system::{weyl_norm, TensorView};
use polycond::{PolynomialSystem, SystemShape};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gaussian_system(n: usize, d: usize, seeds: &SeedPolicy, trial: u64) -> PolynomialSystem<f64> {
    let shape = SystemShape::new(n, d).unwrap();
    PolynomialSystem::homogeneous(sample_system(shape, &DistributionSpec::gaussian(), seeds, trial).unwrap())
}

fn gaussian_vec(seeds: &SeedPolicy, trial: u64, sub: u64, n: usize) -> Vec<f64> {
    seeds.draws(&DistributionSpec::gaussian(), Purpose::Auxiliary, trial, sub, n)
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= nv);
    v
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff = got.iter().zip(want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = want.iter().map(|b| b * b).sum::<f64>().sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn derivative_correctness() -> Outcome {
    let seeds = SeedPolicy::new(101);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for s in 0..20u64 {
        let n = 3 + (s as usize % 4);
        let d = 2 + (s as usize % 3);
        let sys = gaussian_system(n, d, &seeds, s);
        let x = gaussian_vec(&seeds, s, 0, n);
        let y = unit(gaussian_vec(&seeds, s, 1, n));
        let z = unit(gaussian_vec(&seeds, s, 2, n));
        let shift = |v: &[f64], c: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + c * b).collect() };
        let (xp, xm) = (shift(&y, h), shift(&y, -h));
        let fd1: Vec<f64> = sys
            .evaluate(&xp)
            .unwrap()
            .iter()
            .zip(sys.evaluate(&xm).unwrap())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        worst = worst.max(rel_err(&sys.derivative_contract(&x, &[&y]).unwrap(), &fd1));
        let (zp, zm) = (shift(&z, h), shift(&z, -h));
        let fd2: Vec<f64> = sys
            .derivative_contract(&zp, &[&y])
            .unwrap()
            .iter()
            .zip(sys.derivative_contract(&zm, &[&y]).unwrap())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        worst = worst.max(rel_err(&sys.derivative_contract(&x, &[&y, &z]).unwrap(), &fd2));
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e} (limit 1e-5)"))
}

fn euler_identities() -> Outcome {
    let seeds = SeedPolicy::new(102);
    let mut worst = 0.0f64;
    for s in 0..100u64 {
        let n = 2 + (s as usize % 7);
        let d = 1 + (s as usize % 4);
        let sys = gaussian_system(n, d, &seeds, s);
        let x: Vec<f64> = unit(gaussian_vec(&seeds, s, 0, n)).iter().map(|v| v * (0.5 + 1.5 * (s as f64 / 100.0))).collect();
        let f = sys.evaluate(&x).unwrap();
        let mut falling = 1.0;
        for k in 0..=d {
            let got = sys.derivative_contract(&x, &vec![x.as_slice(); k]).unwrap();
            let want: Vec<f64> = f.iter().map(|v| falling * v).collect();
            worst = worst.max(rel_err(&got, &want));
            falling *= (d - k) as f64;
        }
    }
    outcome(worst < 1e-10, format!("max relative error {worst:.2e} over 100 systems (limit 1e-10)"))
}

fn weyl_kss() -> Outcome {
    let seeds = SeedPolicy::new(103);
    let mut worst = 0.0f64;
    for (t, (n, d)) in [(3usize, 2usize), (4, 3), (5, 2), (3, 4), (6, 1), (4, 4)].into_iter().enumerate() {
        let k = make_kss(SystemShape::new(n, d).unwrap(), &seeds, t as u64).unwrap();
        let w = weyl_norm(&k.system);
        for (l, xi) in k.xi.iter().enumerate() {
            let want: f64 = xi.iter().map(|v| v * v).sum();
            worst = worst.max((w.per_form[l].powi(2) - want).abs() / want);
        }
    }
    outcome(worst < 1e-10, format!("max relative error {worst:.2e} (limit 1e-10)"))
}

fn opnorm_linear() -> Outcome {
    let seeds = SeedPolicy::new(104);
    let opts = OpnormOptions { restarts: 4, max_sweeps: 200, tol: 1e-10, seeds, stream: 0 };
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let data = seeds.draws(&DistributionSpec::gaussian(), Purpose::Coefficients, t, 0, 600);
        let r = opnorm(TensorView::new(20, 30, 1, &data), &OpnormOptions { stream: t, ..opts });
        let smax = nalgebra::DMatrix::from_row_slice(20, 30, &data).singular_values().max();
        worst = worst.max((r.value - smax * smax).abs() / (smax * smax));
    }
    outcome(worst < 1e-6, format!("max relative error {worst:.2e} over 50 matrices 20×30 (limit 1e-6)"))
}

fn example1_factor() -> Outcome {
    let r = run_example1(4, 400_000, &SeedPolicy::new(105)).unwrap();
    let exact = 27.0 / 512.0;
    let p = r.p_f_zero;
    outcome(
        p.contains_at(exact, 3.0),
        format!("P(f(x0)=0) = {:.5} ({} of {}), exact {exact:.5}, 3-sigma Wilson [{:.5}, {:.5}]", p.estimate, p.hits, p.trials, {
            polycond::stats::wilson(p.hits, p.trials, 3.0).0
        }, polycond::stats::wilson(p.hits, p.trials, 3.0).1),
    )
}

fn planted_minimum() -> Outcome {
    let mut worst_rate = 1.0f64;
    let mut summary = Vec::new();
    for d in [2usize, 3] {
        for n in 3..=8usize {
            let shape = SystemShape::new(n, d).unwrap();
            let mut ok = 0;
            for seed in 0..20u64 {
                let seeds = SeedPolicy::new(1000 + seed);
                let g = gaussian_vec(&seeds, 0, 0, 2 * n);
                let p = UnitPair::orthonormalize(&g[..n], &g[n..]).unwrap();
                let sys = plant_double_root(shape, &p, &DistributionSpec::gaussian(), &seeds, 0).unwrap();
                let r = l_min_with(&sys, &LMinOptions { restarts: 50, max_iters: 200, tol: 1e-12, seeds, stream: 0 });
                ok += usize::from(r.value <= 1e-6);
            }
            worst_rate = worst_rate.min(ok as f64 / 20.0);
            summary.push(format!("({n},{d}):{ok}/20"));
        }
    }
    outcome(worst_rate >= 0.9, format!("success per (n,d): {} (need ≥ 18/20 each)", summary.join(" ")))
}

fn grid_oracle() -> Outcome {
    let seeds = SeedPolicy::new(107);
    let mut worst_gap = f64::NEG_INFINITY;
    for t in 0..5u64 {
        let sys = gaussian_system(3, 2, &seeds, t);
        let opt = l_min(&sys, 20, 200, 1e-12).value;
        let s = 2f64.powf(4.5) * 3.0;
        let mut best = f64::INFINITY;
        let (na, nb, nc) = (200usize, 200usize, 25usize);
        for a in 0..na {
            let theta = std::f64::consts::PI * (a as f64 + 0.5) / na as f64;
            for b in 0..nb {
                let phi = 2.0 * std::f64::consts::PI * b as f64 / nb as f64;
                let x = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                let e1 = [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin()];
                let e2 = [-phi.sin(), phi.cos(), 0.0];
                let f = sys.evaluate(&x).unwrap();
                let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
                let j = sys.jacobian(&x).unwrap();
                for c in 0..nc {
                    let psi = 2.0 * std::f64::consts::PI * c as f64 / nc as f64;
                    let y: Vec<f64> = (0..3).map(|i| psi.cos() * e1[i] + psi.sin() * e2[i]).collect();
                    let dy = j.mul_vec(&y);
                    let l2 = nf / s.sqrt() + dy.iter().map(|v| v * v).sum::<f64>() / s;
                    best = best.min(l2);
                }
            }
        }
        worst_gap = worst_gap.max(opt - best.sqrt());
    }
    outcome(worst_gap <= 1e-3, format!("max (optimizer − grid) over 5 systems {worst_gap:.3e} (limit 1e-3)"))
}

fn lcd_oracles() -> Outcome {
    let one = lcd_estimate(&[1.0], &LcdQuery::for_vector(&[1.0], 0.4, 0.5, 2.0).unwrap()).unwrap();
    let y = [0.5; 4];
    let half = lcd_estimate(&y, &LcdQuery::for_vector(&y, 0.7, 0.5, 2.0).unwrap()).unwrap();
    let mut scaled = Vec::new();
    for c in [0.5, 2.0] {
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let r = lcd_estimate(&cy, &LcdQuery::for_vector(&cy, 0.7, 0.5, 2.0 / c).unwrap()).unwrap();
        scaled.push((c, r.found, r.lcd));
    }
    let a = one.found && (one.lcd - 2.0 / 3.0).abs() <= 1e-4;
    let b = half.found && (half.lcd - 4.0 / 3.0).abs() <= 1e-4;
    let c = scaled.iter().all(|&(c, f, v)| f && (v - half.lcd / c).abs() <= 1e-3);
    outcome(
        a && b && c,
        format!("lcd((1)) = {:.6}, lcd((1/2)^4) = {:.6}, scaled {:?}", one.lcd, half.lcd, scaled),
    )
}

fn small_ball_exact() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rows = small_ball_estimate(&[h, h], &DistributionSpec::rademacher(), &[0.1], 100_000, &SeedPolicy::new(109)).unwrap();
    let p = rows[0].proportion();
    outcome(p.contains_at(0.5, 3.0), format!("Q(0.1) = {:.4} ({} of {})", p.estimate, p.hits, p.trials))
}

fn tensorization() -> Outcome {
    let rows = tensorization_check(&DistributionSpec::gaussian(), 6, &[0.1], 10_000_000, &SeedPolicy::new(110), &EtaMode::Raw).unwrap();
    let bound = 0.3f64.powi(6);
    outcome(
        rows[0].estimate <= bound,
        format!(
            "P(sum < δ²n) = {:.3e} ({} of {}), bound (3δ)^6 = {bound:.3e}, chi-square value ≈ 4.6e-6",
            rows[0].estimate, rows[0].hits, rows[0].trials
        ),
    )
}

fn tail_shape() -> Outcome {
    let grid: Vec<f64> = (0..=20).map(|k| 1e-3 * 10f64.powf(k as f64 / 8.0)).collect();
    let mut cfg = ExperimentConfig::new(SystemShape::new(5, 2).unwrap(), 10_000, grid.clone(), SeedPolicy::new(111));
    cfg.model = Model::Kss;
    cfg.optimizer = OptimizerKnobs { restarts: 4, max_iters: 100, tol: 1e-12 };
    let c = run_tail(&cfg).unwrap();
    // observable: at least 10 hits and the curve not yet past its midpoint
    let observable: Vec<usize> = (0..grid.len()).filter(|&k| c.hits[k] >= 10 && c.estimate[k] <= 0.5).collect();
    let Some(&start) = observable.first() else {
        return outcome(false, format!("no observable grid point; hits {:?}", c.hits));
    };
    let end = start + 8;
    if end >= grid.len() || !observable.contains(&end) {
        return outcome(false, format!("no full decade in the observable regime; hits {:?}", c.hits));
    }
    let slope = loglog_slope(&grid[start..=end], &c.estimate[start..=end]).unwrap();
    outcome(
        c.is_monotone() && slope >= 0.8,
        format!(
            "monotone {}, slope {slope:.3} over eps ∈ [{:.2e}, {:.2e}] (need ≥ 0.8)",
            c.is_monotone(),
            grid[start],
            grid[end]
        ),
    )
}

fn fact_spread() -> Outcome {
    let p = CompressibilityParams::default_for_degree(2);
    let seeds = SeedPolicy::new(112);
    let mut tested = 0usize;
    let mut failures = 0usize;
    let mut draw = 0u64;
    for n in [8usize, 16] {
        let mut here = 0;
        while here < 5_000 {
            let mut x = gaussian_vec(&seeds, draw, n as u64, n);
            // every third draw leans toward a coordinate axis
            if draw % 3 == 0 {
                let j = (draw as usize / 3) % n;
                let w = 0.02 + 0.3 * ((draw / 3) % 10) as f64 / 10.0;
                x.iter_mut().for_each(|v| *v *= w);
                x[j] += 1.0;
            }
            draw += 1;
            let x = unit(x);
            match classify(&x, &p) {
                Ok(r) if r.class == VectorClass::Incompressible => {
                    here += 1;
                    tested += 1;
                }
                Ok(_) => {}
                Err(_) => {
                    here += 1;
                    tested += 1;
                    failures += 1;
                }
            }
        }
    }
    outcome(failures == 0, format!("{tested} incompressible vectors, {failures} spread-set failures"))
}

fn opnorm_scaling_check() -> Outcome {
    let opts = OpnormOptions { restarts: 20, max_sweeps: 200, tol: 1e-10, seeds: SeedPolicy::new(113), stream: 0 };
    let rows = opnorm_scaling(2, &[6, 12, 24], &DistributionSpec::gaussian(), 20, &SeedPolicy::new(113), &opts, IndexRange::Full).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.median_over_n).collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    outcome(hi / lo < 3.0, format!("median/n = {ratios:.3?}, spread factor {:.3} (limit 3)", hi / lo))
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(&str, Check, Option<Duration>); 13] = [
        ("derivative correctness", derivative_correctness, Some(Duration::from_secs(30))),
        ("Euler identities", euler_identities, None),
        ("Weyl norm of KSS samples", weyl_kss, None),
        ("opnorm of matrices", opnorm_linear, Some(Duration::from_secs(60))),
        ("Rademacher quadric root frequency", example1_factor, Some(Duration::from_secs(300))),
        ("planted minimum", planted_minimum, Some(Duration::from_secs(600))),
        ("grid oracle", grid_oracle, None),
        ("LCD oracles", lcd_oracles, None),
        ("small-ball exact case", small_ball_exact, None),
        ("tensorization", tensorization, Some(Duration::from_secs(180))),
        ("tail shape", tail_shape, None),
        ("spread set of incompressible vectors", fact_spread, None),
        ("opnorm scaling", opnorm_scaling_check, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in checks {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let in_time = limit.map_or(true, |l| took <= l);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        let budget = limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        println!(
            "{} {name}: {} [{:.1}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} of 13 criteria passed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
