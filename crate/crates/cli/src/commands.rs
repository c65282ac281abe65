use qpkc_core::gmn::{self, AttackReport, EmpiricalAttack, FidelityMode};
use qpkc_core::protocol::{
    run_session, session_seed, AdversaryStrategy, SessionConfig, SessionOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{parse_grid, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::report::{Report, Value};

pub const TABLE1_COLUMNS: [&str; 5] = ["K", "F", "I_AE", "I_AE_clamped", "P_e"];
pub const SESSION_COLUMNS: [&str; 10] = [
    "trial",
    "aborted",
    "abort_stage",
    "decoy_err_keygen",
    "decoy_err_issue",
    "recycle_err",
    "msg_ok",
    "digest_ok",
    "eve_bit_accuracy",
    "mean_bell_fidelity",
];
pub const SWEEP_COLUMNS: [&str; 8] = [
    "fraction",
    "sessions",
    "aborted",
    "abort_probability",
    "completed",
    "eve_accuracy",
    "decoy_err_keygen",
    "decoy_err_issue",
];
pub const ESTIMATE_COLUMNS: [&str; 7] = [
    "K",
    "F_theory",
    "Pe_theory",
    "Pe_empirical",
    "EveAcc_theory",
    "EveAcc_empirical",
    "trials",
];

/// Trials per independently seeded block in `estimate-sim`.
const ESTIMATE_BLOCK: u64 = 8192;

pub fn cmd_table1(config: &ExperimentConfig) -> Result<Report> {
    let params = &config.table1;
    if params.k.is_empty() {
        return Err(HarnessError::Usage("K list is empty".into()));
    }
    if let Some(k) = params.k.iter().find(|&&k| k == 0) {
        return Err(HarnessError::Usage(format!(
            "K = {k} is not a positive integer"
        )));
    }
    let mut report = Report::new(&TABLE1_COLUMNS);
    for row in gmn::table1_report::<f64>(&params.k, params.mode.into())? {
        report.push(vec![
            row.copies.into(),
            row.fidelity.into(),
            row.eve_information.into(),
            row.eve_information_clamped.into(),
            row.error_probability.into(),
        ])?;
    }
    report.decimals = params.round4.then_some(4);
    Ok(report)
}

/// Runs `trials` sessions; trial `i` is seeded by `session_seed(seed, i)`, so the result does not
/// depend on thread scheduling.
pub fn run_sessions(
    base: &SessionConfig,
    adversary: &AdversaryStrategy,
    seed: u64,
    trials: u64,
) -> Result<Vec<SessionOutcome>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let config = SessionConfig {
                seed: session_seed(seed, i),
                ..base.clone()
            };
            run_session(&config, adversary).map_err(HarnessError::from)
        })
        .collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn cmd_session(config: &ExperimentConfig) -> Result<Report> {
    config.validate_common()?;
    let base = config.session.session_config()?;
    let adversary = config.session.adversary()?;
    let outcomes = run_sessions(&base, &adversary, config.seed, config.trials)?;

    let mut report = Report::new(&SESSION_COLUMNS);
    for (i, o) in outcomes.iter().enumerate() {
        report.push(vec![
            i.into(),
            o.is_aborted().into(),
            o.aborted.map(|s| s.name()).into(),
            o.decoy_error_rate_keygen.into(),
            o.decoy_error_rate_issue.into(),
            o.recycle_error_rate.into(),
            o.message_ok().into(),
            o.digest_ok.into(),
            o.eve_bit_accuracy().into(),
            o.mean_bell_fidelity().into(),
        ])?;
    }

    // summary: fractions for boolean columns, means over defined values elsewhere
    let rate = |f: &dyn Fn(&SessionOutcome) -> Option<bool>| {
        mean(
            outcomes
                .iter()
                .filter_map(f)
                .map(|b| f64::from(u8::from(b))),
        )
    };
    let avg = |f: &dyn Fn(&SessionOutcome) -> Option<f64>| mean(outcomes.iter().filter_map(f));
    report.push(vec![
        "summary".into(),
        rate(&|o| Some(o.is_aborted())).into(),
        Value::Null,
        avg(&|o| Some(o.decoy_error_rate_keygen)).into(),
        avg(&|o| o.decoy_error_rate_issue).into(),
        avg(&|o| o.recycle_error_rate).into(),
        rate(&|o| Some(o.message_ok())).into(),
        rate(&|o| o.digest_ok).into(),
        avg(&|o| o.eve_bit_accuracy()).into(),
        avg(&|o| o.mean_bell_fidelity()).into(),
    ])?;
    Ok(report)
}

/// Aggregates of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub fraction: f64,
    pub sessions: u64,
    pub aborted: u64,
    pub completed: u64,
    /// Mean over completed runs; a run in which Eve read nothing counts as a coin toss (1/2).
    pub eve_accuracy: Option<f64>,
    pub decoy_err_keygen: f64,
    pub decoy_err_issue: Option<f64>,
}

impl SweepPoint {
    pub fn abort_probability(&self) -> f64 {
        self.aborted as f64 / self.sessions as f64
    }

    fn from_outcomes(fraction: f64, outcomes: &[SessionOutcome]) -> Self {
        let completed: Vec<&SessionOutcome> = outcomes.iter().filter(|o| !o.is_aborted()).collect();
        Self {
            fraction,
            sessions: outcomes.len() as u64,
            aborted: (outcomes.len() - completed.len()) as u64,
            completed: completed.len() as u64,
            eve_accuracy: mean(
                completed
                    .iter()
                    .map(|o| o.eve_bit_accuracy().unwrap_or(0.5)),
            ),
            decoy_err_keygen: mean(outcomes.iter().map(|o| o.decoy_error_rate_keygen))
                .unwrap_or(0.0),
            decoy_err_issue: mean(outcomes.iter().filter_map(|o| o.decoy_error_rate_issue)),
        }
    }
}

/// Every grid point reuses the same trial seeds, so neighbouring points differ only through the
/// attack strength.
pub fn sweep_points(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    config.validate_common()?;
    let grid = parse_grid(&config.sweep.fractions)?;
    let base = config.session.session_config()?;
    let adversaries = grid
        .iter()
        .map(|&f| config.session.adversary_at(f))
        .collect::<Result<Vec<_>>>()?;
    grid.iter()
        .zip(&adversaries)
        .map(|(&f, adversary)| {
            let outcomes = run_sessions(&base, adversary, config.seed, config.trials)?;
            Ok(SweepPoint::from_outcomes(f, &outcomes))
        })
        .collect()
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(&SWEEP_COLUMNS);
    for p in sweep_points(config)? {
        report.push(vec![
            p.fraction.into(),
            p.sessions.into(),
            p.aborted.into(),
            p.abort_probability().into(),
            p.completed.into(),
            p.eve_accuracy.into(),
            p.decoy_err_keygen.into(),
            p.decoy_err_issue.into(),
        ])?;
    }
    Ok(report)
}

/// Runs the state-estimation attack in independently seeded blocks and merges the tallies.
pub fn estimate_sim(config: &ExperimentConfig) -> Result<AttackReport<f64>> {
    config.validate_common()?;
    let p = &config.estimate;
    if p.msg_len == 0 {
        return Err(HarnessError::Usage("msg-len must be at least 1".into()));
    }
    let fidelity = match p.fidelity {
        Some(f) => f,
        None => gmn::optimal_fidelity(p.k, FidelityMode::Approximation)?,
    };
    let mut report = AttackReport::theory(p.k, fidelity)?;

    let mut message_rng = ChaCha8Rng::seed_from_u64(session_seed(config.seed, u64::MAX));
    let message: Vec<u8> = (0..p.msg_len)
        .map(|_| u8::from(message_rng.random_bool(0.5)))
        .collect();
    let blocks = config.trials.div_ceil(ESTIMATE_BLOCK);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let trials = ESTIMATE_BLOCK.min(config.trials - b * ESTIMATE_BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(session_seed(config.seed, b));
            gmn::simulate_with_fidelity(p.n, fidelity, &message, trials, &mut rng)
                .map_err(HarnessError::from)
        })
        .collect::<Result<Vec<EmpiricalAttack>>>()?;
    let mut total = EmpiricalAttack::default();
    for t in &tallies {
        total.merge(t);
    }
    report.empirical = Some(total);
    Ok(report)
}

pub fn cmd_estimate_sim(config: &ExperimentConfig) -> Result<Report> {
    let r = estimate_sim(config)?;
    let empirical = r
        .empirical
        .ok_or_else(|| HarnessError::Internal("missing empirical tallies".into()))?;
    let mut report = Report::new(&ESTIMATE_COLUMNS);
    report.push(vec![
        r.copies.into(),
        r.fidelity.into(),
        r.error_probability.into(),
        empirical.error_rate().into(),
        r.fidelity.into(),
        empirical.eve_accuracy().into(),
        config.trials.into(),
    ])?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AdversaryName;

    #[test]
    fn table1_k1_exact_is_three_quarters() {
        let mut c = ExperimentConfig::default();
        c.table1.k = vec![1];
        c.table1.mode = crate::config::ModeName::Exact;
        let r = cmd_table1(&c).unwrap();
        assert_eq!(r.cell(0, "F"), Some(&Value::Float(0.75)));
    }

    #[test]
    fn table1_rejects_empty_and_zero() {
        let mut c = ExperimentConfig::default();
        c.table1.k = vec![];
        assert!(matches!(cmd_table1(&c), Err(HarnessError::Usage(_))));
        c.table1.k = vec![5, 0];
        assert!(cmd_table1(&c).unwrap_err().to_string().contains("K = 0"));
    }

    #[test]
    fn clean_sessions_summary() {
        let c = ExperimentConfig {
            trials: 20,
            ..Default::default()
        };
        let r = cmd_session(&c).unwrap();
        assert_eq!(r.rows.len(), 21);
        assert_eq!(r.cell(20, "trial"), Some(&Value::Text("summary".into())));
        assert_eq!(r.cell(20, "msg_ok"), Some(&Value::Float(1.0)));
        assert_eq!(r.cell(20, "aborted"), Some(&Value::Float(0.0)));
        assert_eq!(r.cell(0, "eve_bit_accuracy"), Some(&Value::Null));
    }

    #[test]
    fn dos_full_flip_fails_every_trial() {
        let mut c = ExperimentConfig {
            trials: 20,
            ..Default::default()
        };
        c.session.adversary = AdversaryName::Dos;
        c.session.flip_prob = 1.0;
        let r = cmd_session(&c).unwrap();
        for i in 0..20 {
            assert_eq!(r.cell(i, "msg_ok"), Some(&Value::Bool(false)));
            assert_eq!(r.cell(i, "digest_ok"), Some(&Value::Bool(false)));
        }
    }

    #[test]
    fn estimate_with_perfect_fidelity_has_no_errors() {
        let mut c = ExperimentConfig {
            trials: 2000,
            ..Default::default()
        };
        c.estimate.fidelity = Some(1.0);
        let r = cmd_estimate_sim(&c).unwrap();
        assert_eq!(r.cell(0, "Pe_empirical"), Some(&Value::Float(0.0)));
        assert_eq!(r.cell(0, "EveAcc_empirical"), Some(&Value::Float(1.0)));
    }

    #[test]
    fn estimate_theory_at_k1000() {
        let mut c = ExperimentConfig {
            trials: 1,
            ..Default::default()
        };
        c.estimate.k = 1000;
        let r = cmd_estimate_sim(&c).unwrap();
        let pe = r.cell(0, "Pe_theory").unwrap().as_f64().unwrap();
        assert_eq!(format!("{pe:.4}"), "0.0005");
    }

    #[test]
    fn estimate_blocks_do_not_depend_on_thread_count() {
        let c = ExperimentConfig {
            trials: 3 * ESTIMATE_BLOCK + 17,
            ..Default::default()
        };
        let a = cmd_estimate_sim(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| cmd_estimate_sim(&c)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cell(0, "trials"), Some(&Value::Int(3 * 8192 + 17)));
    }
}
