//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use qpkc_core::gmn::{optimal_fidelity_approx, optimal_fidelity_exact};
use qpkc_core::protocol::{AdversaryStrategy, Session, SessionConfig};
use qpkc_core::qsim::MeasurementBasis;
use qpkc_lab::commands::{run_sessions, sweep_points};
use qpkc_lab::config::AdversaryName;
use qpkc_lab::{ExperimentConfig, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < budget, || {
        format!("took {elapsed:.2?}, budget {budget:?}")
    })?;
    Ok(elapsed)
}

fn run_cli(args: &[&str]) -> Result<Report, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qpkc-lab"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Report::from_csv(&String::from_utf8_lossy(&out.stdout)).map_err(|e| e.to_string())
}

fn column_f64(report: &Report, name: &str) -> Result<Vec<f64>, String> {
    report
        .column(name)
        .ok_or_else(|| format!("no column {name}"))?
        .into_iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| format!("{name}: non-numeric {v:?}"))
        })
        .collect()
}

fn table1_reproduction() -> Check {
    let start = Instant::now();
    let report = run_cli(&[
        "table1",
        "--k",
        "10,20,50,100,1000",
        "--mode",
        "approx",
        "--round4",
    ])?;
    let elapsed = within_budget(start, Duration::from_secs(1))?;
    let info = column_f64(&report, "I_AE")?;
    let pe = column_f64(&report, "P_e")?;
    let want_info = ["0.6627", "0.8061", "0.9092", "0.9496", "0.9933"];
    let want_pe = ["0.0488", "0.0247", "0.0100", "0.0050", "0.0005"];
    ensure(report.rows.len() == 5, || {
        format!("{} rows", report.rows.len())
    })?;
    for i in 0..5 {
        let (a, b) = (format!("{:.4}", info[i]), format!("{:.4}", pe[i]));
        ensure(a == want_info[i] && b == want_pe[i], || {
            format!(
                "row {i}: I={a} P_e={b}, want {} {}",
                want_info[i], want_pe[i]
            )
        })?;
    }
    Ok(format!("5 rows match at 4 d.p. in {elapsed:.2?}"))
}

/// Direct binomial sum with the pmf built by the ratio recursion from `2^{-M}`.
fn fidelity_oracle(m: u64) -> f64 {
    let mut b = 0.5f64.powi(m as i32);
    let mut sum = 0.0;
    for i in 0..=m {
        sum += b * ((m - i) as f64 / (i + 1) as f64).sqrt();
        b *= (m - i) as f64 / (i + 1) as f64;
    }
    0.5 + 0.5 * sum
}

fn exact_fidelity_sum() -> Check {
    let f = |m| optimal_fidelity_exact::<f64>(m).map_err(|e| e.to_string());
    for m in 1..=1000u64 {
        let (exact, oracle) = (f(m)?, fidelity_oracle(m));
        ensure((exact - oracle).abs() <= 1e-12, || {
            format!("F({m}) = {exact}, oracle {oracle}")
        })?;
    }
    let start = Instant::now();
    ensure(f(1)? == 0.75, || format!("F(1) = {}", f(1).unwrap()))?;
    ensure((f(2)? - 0.8535534).abs() <= 1e-6, || {
        format!("F(2) = {}", f(2).unwrap())
    })?;
    ensure((f(10)? - 0.975242).abs() <= 1e-5, || {
        format!("F(10) = {}", f(10).unwrap())
    })?;
    let mut previous = 0.0;
    let mut worst_gap: f64 = 0.0;
    for m in 1..=10_000u64 {
        let exact = f(m)?;
        ensure(exact >= previous, || {
            format!("F({m}) = {exact} < F({}) = {previous}", m - 1)
        })?;
        previous = exact;
        if m >= 10 {
            let gap = (exact - optimal_fidelity_approx::<f64>(m)).abs();
            worst_gap = worst_gap.max(gap);
            ensure(gap < 1e-3, || {
                format!("|exact - approx| = {gap} at M = {m}")
            })?;
        }
    }
    let elapsed = within_budget(start, Duration::from_secs(5))?;
    Ok(format!("F(1)=0.75, F(2)={:.9}, F(10)={:.9}, max gap {worst_gap:.2e}, monotone to 1e4 in {elapsed:.2?}", f(2)?, f(10)?))
}

fn estimate_sim_monte_carlo() -> Check {
    let start = Instant::now();
    let report = run_cli(&["estimate-sim", "--k", "10", "--trials", "1000000"])?;
    let elapsed = within_budget(start, Duration::from_secs(60))?;
    let acc = column_f64(&report, "EveAcc_empirical")?[0];
    let pe = column_f64(&report, "Pe_empirical")?[0];
    ensure((acc - 0.975).abs() <= 1e-3, || {
        format!("Eve accuracy {acc}")
    })?;
    ensure((pe - 0.04875).abs() <= 1e-3, || format!("error rate {pe}"))?;
    Ok(format!(
        "Eve accuracy {acc:.6}, error rate {pe:.6} in {elapsed:.2?}"
    ))
}

fn base_session() -> SessionConfig {
    SessionConfig {
        key_length: 64,
        message_length: 32,
        decoy_count: Some(16),
        ..Default::default()
    }
}

fn protocol_round_trip() -> Check {
    let start = Instant::now();
    let outcomes = run_sessions(&base_session(), &AdversaryStrategy::none(), 1, 1000)
        .map_err(|e| e.to_string())?;
    let elapsed = within_budget(start, Duration::from_secs(30))?;
    for (i, o) in outcomes.iter().enumerate() {
        ensure(!o.is_aborted() && o.recovered_message == o.message, || {
            format!("session {i} lost the message")
        })?;
        ensure(
            o.decoy_error_rate_keygen == 0.0 && o.decoy_error_rate_issue == Some(0.0),
            || format!("session {i} decoy errors"),
        )?;
        ensure(o.recycle_error_rate == Some(0.0), || {
            format!("session {i} recycle errors")
        })?;
        ensure(o.digest_ok == Some(true), || {
            format!("session {i} digest mismatch")
        })?;
        ensure(
            o.post_decrypt_bell_fidelities.len() == 64
                && o.post_decrypt_bell_fidelities
                    .iter()
                    .all(|f| (f - 1.0).abs() <= 1e-10),
            || format!("session {i} Bell fidelity off"),
        )?;
    }
    Ok(format!(
        "1000 sessions, 64 000 bits recovered, fidelities 1 ± 1e-10 in {elapsed:.2?}"
    ))
}

fn entangling_tradeoff() -> Check {
    let start = Instant::now();
    let outcomes = run_sessions(
        &base_session(),
        &AdversaryStrategy::entangle(1.0),
        2,
        10_000,
    )
    .map_err(|e| e.to_string())?;
    let elapsed = within_budget(start, Duration::from_secs(120))?;
    let aborted = outcomes.iter().filter(|o| o.is_aborted()).count();
    let freq = aborted as f64 / outcomes.len() as f64;
    let expected = 1.0 - 0.75f64.powi(16);
    ensure((freq - expected).abs() <= 0.01, || {
        format!("abort frequency {freq}, expected {expected}")
    })?;
    let completed: Vec<_> = outcomes.iter().filter(|o| !o.is_aborted()).collect();
    ensure(!completed.is_empty(), || "no completed run".into())?;
    for o in &completed {
        ensure(o.eve_bit_accuracy() == Some(1.0), || {
            format!("Eve accuracy {:?}", o.eve_bit_accuracy())
        })?;
    }
    Ok(format!(
        "abort {freq:.4} vs {expected:.5}, Eve accuracy 1.0 on {} completed runs in {elapsed:.2?}",
        completed.len()
    ))
}

fn ciphertext_mixedness() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut qubits = 0;
    for trial in 0..100 {
        let config = SessionConfig {
            seed: trial,
            ..base_session()
        };
        let mut session =
            Session::new(config, AdversaryStrategy::none()).map_err(|e| e.to_string())?;
        session.stage1_keygen().map_err(|e| e.to_string())?;
        let issue = session
            .stage2_issue_public_key(32)
            .map_err(|e| e.to_string())?;
        let message: Vec<u8> = (0..32).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let cipher = session
            .stage2_encrypt(&issue.pairs, &message)
            .map_err(|e| e.to_string())?;
        for c in &cipher {
            let register = &session
                .store()
                .get(c.pair)
                .map_err(|e| e.to_string())?
                .register;
            let mut bases = vec![MeasurementBasis::Z, MeasurementBasis::X];
            bases.extend(
                (0..10).map(|_| {
                    MeasurementBasis::Planar(rng.random_range(0.0..std::f64::consts::TAU))
                }),
            );
            for basis in &bases {
                let (p0, p1) = register
                    .outcome_probabilities(c.qubit, basis)
                    .map_err(|e| e.to_string())?;
                ensure(
                    (p0 - 0.5).abs() <= 1e-12 && (p1 - 0.5).abs() <= 1e-12,
                    || format!("message {trial}: ({p0}, {p1}) in {basis:?}"),
                )?;
            }
            qubits += 1;
        }
    }
    let elapsed = within_budget(start, Duration::from_secs(5))?;
    Ok(format!(
        "{qubits} ciphertext qubits at (1/2, 1/2) in 12 bases in {elapsed:.2?}"
    ))
}

fn sweep_monotonicity() -> Check {
    let mut config = ExperimentConfig {
        trials: 1000,
        ..Default::default()
    };
    config.session.adversary = AdversaryName::Entangle;
    config.sweep.fractions = "0:1:0.1".into();
    let points = sweep_points(&config).map_err(|e| e.to_string())?;
    ensure(points.len() == 11, || {
        format!("{} grid points", points.len())
    })?;
    ensure(points[0].aborted == 0, || {
        format!("fraction 0 aborted {}", points[0].aborted)
    })?;
    let abort: Vec<f64> = points.iter().map(|p| p.abort_probability()).collect();
    let acc: Vec<f64> = points
        .iter()
        .map(|p| {
            p.eve_accuracy
                .ok_or_else(|| format!("no completed run at {}", p.fraction))
        })
        .collect::<Result<_, _>>()?;
    for w in 1..points.len() {
        ensure(abort[w] > abort[w - 1], || {
            format!("abort not increasing at {}: {abort:?}", points[w].fraction)
        })?;
        ensure(acc[w] > acc[w - 1], || {
            format!("accuracy not increasing at {}: {acc:?}", points[w].fraction)
        })?;
    }
    // blind guessing over 32 000 bits
    ensure(
        (acc[0] - 0.5).abs() <= 4.0 * (0.25f64 / 32_000.0).sqrt(),
        || format!("accuracy at 0 is {}", acc[0]),
    )?;
    ensure(acc[10] == 1.0, || format!("accuracy at 1 is {}", acc[10]))?;
    Ok(format!(
        "abort {:.3} → {:.3}, Eve accuracy {:.3} → {:.3}, both strictly increasing",
        abort[0], abort[10], acc[0], acc[10]
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("table1 reproduction", table1_reproduction),
        ("exact fidelity sum", exact_fidelity_sum),
        ("estimate-sim Monte Carlo", estimate_sim_monte_carlo),
        ("protocol round trip", protocol_round_trip),
        ("entangling-attack tradeoff", entangling_tradeoff),
        ("ciphertext mixedness", ciphertext_mixedness),
        ("sweep monotonicity", sweep_monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
