//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmdecomp::cli::{run, Cli, Command};
use mmdecomp::robustness::{sweep_size, FidelityStats, SweepResult};
use mmdecomp::{
    component_fidelity_estimate, decompose_traced, factor_count_bound, fidelity, haar_random_unitary,
    reconstruct, sweep_noise, Complex, ComplexMatrix, Error, TrialConfig,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Haar,
    Permutation,
    Identity,
}

struct Case {
    kind: Kind,
    n: usize,
    m: usize,
    u: ComplexMatrix,
}

fn permutation(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    ComplexMatrix::from_fn(n, n, |i, j| {
        if p[i] == j {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

fn round_trip_cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..200)
        .map(|k| {
            let n = rng.random_range(2..=30);
            let m = rng.random_range(2..=n);
            let kind = match k % 10 {
                0 => Kind::Identity,
                1 | 2 => Kind::Permutation,
                _ => Kind::Haar,
            };
            let u = match kind {
                Kind::Identity => ComplexMatrix::identity(n),
                Kind::Permutation => permutation(n, &mut rng),
                Kind::Haar => haar_random_unitary(n, rng.random()).unwrap(),
            };
            Case { kind, n, m, u }
        })
        .collect()
}

struct CaseResult {
    kind: Kind,
    n: usize,
    m: usize,
    outcome: Result<(usize, f64, f64), Error>,
}

fn run_cases() -> (Vec<CaseResult>, Duration) {
    let start = Instant::now();
    let results = round_trip_cases()
        .into_iter()
        .map(|c| CaseResult {
            kind: c.kind,
            n: c.n,
            m: c.m,
            outcome: decompose_traced(&c.u, c.m, None).and_then(|d| {
                let rebuilt = reconstruct(&d.plan);
                Ok((
                    d.plan.factors().len(),
                    rebuilt.max_abs_diff(&c.u)?,
                    fidelity(&c.u, &rebuilt)?,
                ))
            }),
        })
        .collect();
    (results, start.elapsed())
}

fn criterion_round_trip(results: &[CaseResult], elapsed: Duration) -> Outcome {
    let mut worst_err_ratio: f64 = 0.0;
    let mut worst_infidelity: f64 = 0.0;
    for r in results {
        let (_, err, fid) = r
            .outcome
            .as_ref()
            .map_err(|e| format!("n={} m={} {:?}: {e}", r.n, r.m, r.kind))?;
        ensure(*err <= 1e-9 * r.n as f64, || {
            format!("n={} m={} {:?}: max error {err:.3e}", r.n, r.m, r.kind)
        })?;
        ensure(*fid >= 1.0 - 1e-10, || {
            format!("n={} m={} {:?}: fidelity {fid}", r.n, r.m, r.kind)
        })?;
        worst_err_ratio = worst_err_ratio.max(err / (1e-9 * r.n as f64));
        worst_infidelity = worst_infidelity.max(1.0 - fid);
    }
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} cases, worst error {:.2e} of budget, worst infidelity {:.1e}, {:.2?}",
        results.len(),
        worst_err_ratio,
        worst_infidelity,
        elapsed
    ))
}

fn criterion_counts(results: &[CaseResult]) -> Outcome {
    let mut beam_splitter_cases = 0;
    for r in results {
        let (count, _, _) = r.outcome.as_ref().map_err(|e| e.to_string())?;
        let bound = factor_count_bound(r.n, r.m).map_err(|e| e.to_string())?;
        ensure(*count <= bound, || format!("n={} m={}: {count} > {bound}", r.n, r.m))?;
        if r.m == 2 && r.kind == Kind::Haar {
            beam_splitter_cases += 1;
            ensure(*count == r.n * (r.n - 1) / 2, || {
                format!("n={} m=2: {count} factors, expected {}", r.n, r.n * (r.n - 1) / 2)
            })?;
        }
    }
    // the random draw may contain few m = 2 cases; cover n = 2..=30 explicitly
    for n in 2..=30 {
        let u = haar_random_unitary(n, 5000 + n as u64).unwrap();
        let count = decompose_traced(&u, 2, None).map_err(|e| e.to_string())?.plan.factors().len();
        ensure(count == n * (n - 1) / 2, || format!("n={n} m=2: {count} factors"))?;
    }
    Ok(format!(
        "all counts within bound; {beam_splitter_cases} random + 29 dedicated m=2 Haar cases equal n(n-1)/2"
    ))
}

fn criterion_structural_zeros(results: &[CaseResult]) -> Outcome {
    for r in results {
        if let Err(e) = &r.outcome {
            return Err(format!("n={} m={}: {e}", r.n, r.m));
        }
    }
    // zero accounting on Haar inputs: net below-diagonal zeros = n(n-1)/2
    for case in round_trip_cases().iter().filter(|c| c.kind == Kind::Haar).take(40) {
        let d = decompose_traced(&case.u, case.m, None).map_err(|e| e.to_string())?;
        let expected = (case.n * (case.n - 1) / 2) as isize;
        ensure(d.trace.total_zeros_created() == expected, || {
            format!(
                "n={} m={}: {} zeros created, expected {expected}",
                case.n,
                case.m,
                d.trace.total_zeros_created()
            )
        })?;
    }
    Ok("no block-zero or below-row violations; zero accounting balances".into())
}

fn criterion_fidelity_examples() -> Outcome {
    let c = Complex::new;
    let q = haar_random_unitary(4, 77).unwrap();
    let i2 = ComplexMatrix::identity(2);
    let cases = [
        ("F(Q,Q)", fidelity(&q, &q), 1.0),
        ("F(Q,e^it Q)", fidelity(&q, &q.scale(Complex::from_polar(1.0, 1.3))), 1.0),
        (
            "F(I,diag(1,-1))",
            fidelity(&i2, &ComplexMatrix::from_diagonal(&[c(1., 0.), c(-1., 0.)])),
            0.0,
        ),
        (
            "F(I,diag(1,i))",
            fidelity(&i2, &ComplexMatrix::from_diagonal(&[c(1., 0.), c(0., 1.)])),
            0.5,
        ),
    ];
    let mut parts = Vec::new();
    for (name, got, want) in cases {
        let got = got.map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 1e-12, || format!("{name} = {got}, expected {want}"))?;
        parts.push(format!("{name}={got:.3}"));
    }
    Ok(parts.join(" "))
}

/// `F_U` at component fidelity `level`, interpolated linearly in
/// `(ln F_Q, ln F_U)` between the bracketing sweep points.
fn interpolate(points: &[&SweepResult], level: f64) -> Option<(f64, f64)> {
    let mut pts: Vec<&&SweepResult> = points.iter().collect();
    pts.sort_by(|a, b| a.fq.mean.total_cmp(&b.fq.mean));
    pts.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if !(a.fq.mean <= level && level <= b.fq.mean) {
            return None;
        }
        let t = (level.ln() - a.fq.mean.ln()) / (b.fq.mean.ln() - a.fq.mean.ln());
        let fu = ((1.0 - t) * a.fu.mean.ln() + t * b.fu.mean.ln()).exp();
        let se = (1.0 - t) * a.fu.std_error + t * b.fu.std_error;
        Some((fu, se))
    })
}

const MS: [usize; 4] = [2, 3, 5, 10];

fn criterion_noise_sweep() -> Outcome {
    let sigmas = [0.005, 0.02, 0.05, 0.1, 0.17, 0.26];
    let cfg = TrialConfig {
        n_matrices: 20,
        n_perturbations: 5,
        seed: 4,
    };
    let rows = sweep_noise(20, &MS, &sigmas, &cfg).map_err(|e| e.to_string())?;
    let by_m: Vec<Vec<&SweepResult>> = MS
        .iter()
        .map(|&m| rows.iter().filter(|r| r.m == m).collect())
        .collect();

    for (m, series) in MS.iter().zip(&by_m) {
        for w in series.windows(2) {
            ensure(w[1].fq.mean < w[0].fq.mean && w[1].fu.mean < w[0].fu.mean, || {
                format!(
                    "m={m}: not monotone between sigma {} and {}",
                    w[0].sigma, w[1].sigma
                )
            })?;
        }
    }

    let levels = [0.999, 0.995, 0.99, 0.98, 0.95, 0.9, 0.85];
    let mut weakest_margin = f64::INFINITY;
    for &level in &levels {
        let interp: Vec<(f64, f64)> = by_m
            .iter()
            .zip(MS)
            .map(|(s, m)| interpolate(s, level).ok_or(format!("m={m} does not reach F_Q={level}")))
            .collect::<Result<_, _>>()?;
        for i in 0..MS.len() {
            for j in i + 1..MS.len() {
                let (lo, se_lo) = interp[i];
                let (hi, se_hi) = interp[j];
                let pooled = (se_lo * se_lo + se_hi * se_hi).sqrt();
                ensure(hi >= lo - 3.0 * pooled, || {
                    format!(
                        "F_Q={level}: F_U(m={}) = {hi:.4} < F_U(m={}) = {lo:.4} beyond 3 se",
                        MS[j], MS[i]
                    )
                })?;
                if pooled > 0.0 {
                    weakest_margin = weakest_margin.min((hi - lo) / pooled);
                }
            }
        }
    }
    let at95: Vec<String> = by_m
        .iter()
        .zip(MS)
        .map(|(s, m)| format!("m={m}:{:.3}", interpolate(s, 0.95).unwrap().0))
        .collect();
    Ok(format!(
        "n=20, 20x5 samples; F_U at F_Q=0.95 [{}]; weakest ordering margin {weakest_margin:.1} se",
        at95.join(" ")
    ))
}

fn criterion_size_sweep() -> Outcome {
    let start = Instant::now();
    let cfg = TrialConfig {
        n_matrices: 20,
        n_perturbations: 5,
        seed: 6,
    };
    let mut table: Vec<(usize, Vec<SweepResult>)> = Vec::new();
    let mut cal_notes = Vec::new();
    for &m in &MS {
        let mut ns = vec![m, 10, 20, 30];
        ns.sort_unstable();
        ns.dedup();
        let sweep = sweep_size(&[m], &ns, 0.95, 0.0005, &cfg).map_err(|e| e.to_string())?;
        let (_, cal) = sweep.calibrations[0];
        let fresh: FidelityStats =
            component_fidelity_estimate(m, cal.sigma, 200_000, 0xFEED_0000 + m as u64).map_err(|e| e.to_string())?;
        ensure((0.9495..=0.9505).contains(&fresh.mean), || {
            format!("m={m}: sigma {} re-verified at F_Q = {:.5}", cal.sigma, fresh.mean)
        })?;
        cal_notes.push(format!("m={m}:sigma={:.4},F_Q={:.5}", cal.sigma, fresh.mean));

        for w in sweep.results.windows(2) {
            let se = (w[0].fu.std_error.powi(2) + w[1].fu.std_error.powi(2)).sqrt();
            ensure(w[1].fu.mean <= w[0].fu.mean + 3.0 * se, || {
                format!("m={m}: F_U rises from n={} to n={}", w[0].n, w[1].n)
            })?;
        }
        table.push((m, sweep.results));
    }
    for n in [10, 20, 30] {
        let at_n: Vec<(usize, SweepResult)> = table
            .iter()
            .map(|(m, rows)| (*m, *rows.iter().find(|r| r.n == n).unwrap()))
            .collect();
        for w in at_n.windows(2) {
            let (ma, a) = w[0];
            let (mb, b) = w[1];
            let se = (a.fu.std_error.powi(2) + b.fu.std_error.powi(2)).sqrt();
            ensure(b.fu.mean >= a.fu.mean - 3.0 * se, || {
                format!(
                    "n={n}: F_U(m={mb}) = {:.4} < F_U(m={ma}) = {:.4}",
                    b.fu.mean, a.fu.mean
                )
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    let at30: Vec<String> = table
        .iter()
        .map(|(m, rows)| format!("m={m}:{:.3}", rows.last().unwrap().fu.mean))
        .collect();
    Ok(format!(
        "[{}]; F_U at n=30 [{}]; {:.1?}",
        cal_notes.join(" "),
        at30.join(" "),
        elapsed
    ))
}

fn cost_verdict(n: usize, m: usize, cm: f64, c2: f64) -> Result<bool, String> {
    let mut out = Vec::new();
    run(
        Cli {
            command: Command::Cost { n, m, cm, c2 },
        },
        &mut out,
    )
    .map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("advantageous"))
        .ok_or("no verdict line")?;
    Ok(line.split_whitespace().nth(1) == Some("true"))
}

fn criterion_cost_threshold() -> Outcome {
    let c2 = 1.0;
    let threshold = |m: usize| (m * (m - 1)) as f64 / 2.0 * c2;
    // at n = 200 the +(n-1) overhead of the bound is below 5% only for m = 3
    ensure(cost_verdict(200, 3, 0.95 * threshold(3), c2)?, || "n=200 m=3: cheaper blocks not advantageous".into())?;
    ensure(!cost_verdict(200, 3, 1.05 * threshold(3), c2)?, || "n=200 m=3: dearer blocks advantageous".into())?;
    for m in [4, 5, 10] {
        ensure(!cost_verdict(200, m, 1.05 * threshold(m), c2)?, || format!("n=200 m={m}: dearer blocks advantageous"))?;
        ensure(cost_verdict(20_000, m, 0.95 * threshold(m), c2)?, || format!("n=20000 m={m}: cheaper blocks not advantageous"))?;
        ensure(!cost_verdict(20_000, m, 1.05 * threshold(m), c2)?, || format!("n=20000 m={m}: dearer blocks advantageous"))?;
    }
    ensure(!cost_verdict(200, 3, threshold(3), c2)?, || "equality counted as advantageous".into())?;
    Ok("m=3 at n=200 flips across c_m = m(m-1)/2 c_2 +-5%; m=4,5,10 flip at n=20000".into())
}

fn cli_sweep_bytes(dir: &std::path::Path, tag: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    use clap::Parser;
    let noise = dir.join(format!("noise_{tag}.csv"));
    let size = dir.join(format!("size_{tag}.csv"));
    let runs = [
        vec![
            "mmdecomp", "sweep-noise", "--n", "8", "--m-list", "2,3,5", "--sigmas", "0,0.05,0.1",
            "--matrices", "5", "--perturbations", "3", "--seed", "11", "--out",
            noise.to_str().unwrap(),
        ],
        vec![
            "mmdecomp", "sweep-size", "--m-list", "2,3", "--n-list", "4,6", "--target-fq", "0.95",
            "--fq-tol", "0.005", "--calibration-trials", "5000", "--matrices", "4",
            "--perturbations", "2", "--seed", "11", "--out", size.to_str().unwrap(),
        ],
    ];
    for args in runs {
        let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
        run(cli, &mut Vec::new()).map_err(|e| e.to_string())?;
    }
    Ok((std::fs::read(noise).unwrap(), std::fs::read(size).unwrap()))
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = cli_sweep_bytes(dir.path(), "a")?;
    let second = cli_sweep_bytes(dir.path(), "b")?;
    ensure(first.0 == second.0, || "sweep-noise CSV differs between runs".into())?;
    ensure(first.1 == second.1, || "sweep-size CSV differs between runs".into())?;
    let rows = String::from_utf8_lossy(&first.0).lines().filter(|l| !l.starts_with('#')).count();
    Ok(format!("sweep-noise ({} lines) and sweep-size CSVs byte-identical", rows))
}

type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

fn main() {
    let (results, elapsed) = run_cases();
    let criteria: Vec<Criterion> = vec![
        ("1 round-trip correctness", Box::new(|| criterion_round_trip(&results, elapsed))),
        ("2 factor counts", Box::new(|| criterion_counts(&results))),
        ("3 structural zeros", Box::new(|| criterion_structural_zeros(&results))),
        ("4 fidelity metric examples", Box::new(criterion_fidelity_examples)),
        ("5 noise sweep ordering (desk scale)", Box::new(criterion_noise_sweep)),
        ("6 size sweep at F_Q=0.95 (desk scale)", Box::new(criterion_size_sweep)),
        ("7 cost threshold", Box::new(criterion_cost_threshold)),
        ("8 sweep determinism", Box::new(criterion_determinism)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
