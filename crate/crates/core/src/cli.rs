//! Experiment drivers behind the command-line interface: scenario runs,
//! estimator comparison, report verification, and the system registry listing.

use crate::cocycle::phi_n;
use crate::config::{Experiment, Scenario};
use crate::equilibrium::{
    check_hypotheses, entropy, maximize_free_energy, measure_lyapunov, potential_integral,
};
use crate::error::{Error, Result};
use crate::orbits::{
    classify_saddle, enumerate_periodic_points, sample_invariant_points, FiltrationParams,
};
use crate::pressure::{
    p_periodic, p_sp, p_sp_limit, p_sp_limit_sequence, p_transfer, q_sp, q_sp_sequence,
    sup_seq_pressure, Diagnostics, FitMethod, Potential, PressureEstimate, PressureRecord,
    SeqEstimator,
};
use crate::report::{
    cache_enumeration, cached_orbits, reports_match, write_table, Comparison, ComparisonRow,
    EnumerationSummary, InvariantResult, MeasureSummary, Report,
};
use crate::systems::{make_system, MapSystem};
use std::path::{Path, PathBuf};

/// Pressure of the unstable-direction potential must be nonpositive; all
/// estimators are allowed this much numerical headroom above zero.
pub const NONPOSITIVITY_SLACK: f64 = 0.05;

/// Process exit code for an error, per the run contract: 2 for scenario
/// schema violations, 3 for failed numerical invariants, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigSchema { .. } => 2,
        Error::AssertionFailed { .. } | Error::MonotonicityViolation { .. } => 3,
        _ => 1,
    }
}

/// Registry of runnable system kinds with their scenario JSON shapes.
pub fn system_registry() -> Vec<(&'static str, &'static str)> {
    vec![
        ("cat", r#"{"kind": "cat"} -- the standard hyperbolic toral automorphism [[2,1],[1,1]]"#),
        (
            "toral",
            r#"{"kind": "toral", "matrix": [[2,1],[3,2]]} -- hyperbolic toral automorphism, 2x2 or 3x3 integer matrix"#,
        ),
        (
            "horseshoe",
            r#"{"kind": "horseshoe", "s": 2, "beta": 4.0, "gamma": 0.25} -- s-branch linear horseshoe, expansion beta, contraction gamma"#,
        ),
        (
            "sft",
            r#"{"kind": "sft", "transition": [[1,1],[1,0]]} -- subshift of finite type realized on horseshoe geometry"#,
        ),
        ("henon", r#"{"kind": "henon", "a": 1.4, "b": 0.3} -- the Henon map"#),
        (
            "power",
            r#"{"kind": "power", "base": {...}, "k": 2} -- the k-th iterate of a base system"#,
        ),
    ]
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn exact_estimate(n: usize, value: f64) -> PressureEstimate {
    PressureEstimate {
        value,
        records: vec![PressureRecord { n, count: 0, value }],
        fit: FitMethod::Exact,
        diagnostics: Diagnostics::default(),
    }
}

// ---------------------------------------------------------------------------
// experiments

fn run_enumerate(
    system: &MapSystem,
    sc: &Scenario,
    report: &mut Report,
    output_dir: &Path,
    cache_dir: Option<&Path>,
) -> Result<()> {
    let cache_path = output_dir.join("orbits.cache");
    for &n in &sc.n_range {
        let e = enumerate_periodic_points(system, n)?;
        let mut saddles = 0usize;
        let mut max_residual = 0.0f64;
        for o in &e.orbits {
            if classify_saddle(system, o)?.is_saddle {
                saddles += 1;
            }
            max_residual = max_residual.max(o.residual);
        }
        report.enumerations.push(EnumerationSummary {
            n,
            fixed_points: e.fixed_point_count(),
            orbits: e.orbits.len(),
            saddles,
            max_residual,
            rejections: e.rejections.len(),
        });
        cache_enumeration(&cache_path, &report.label, &e)?;
        if let Some(dir) = cache_dir {
            let shared = dir.join("orbits.cache");
            if cached_orbits(&shared, &report.label, n)?.is_none() {
                cache_enumeration(&shared, &report.label, &e)?;
            }
        }
    }
    Ok(())
}

fn run_pressures(system: &MapSystem, sc: &Scenario, report: &mut Report) -> Result<()> {
    let depth_max = *sc.depths.iter().max().unwrap();
    for pot in &sc.build_potentials()? {
        let key = sanitize(&pot.label());
        report.pressures.insert(
            format!("p_sp_limit.{key}"),
            p_sp_limit(system, pot, &sc.alpha_grid, &sc.c_grid, &sc.n_range)?,
        );
        report
            .pressures
            .insert(format!("p_periodic.{key}"), p_periodic(system, pot, &sc.n_range)?);
        if system.coding.is_some() {
            for &d in &sc.depths {
                let v = p_transfer(system, pot, d)?;
                report
                    .pressures
                    .insert(format!("p_transfer.{key}.d{d}"), exact_estimate(d, v));
            }
        }
    }
    report.pressures.insert(
        "p_sp_sequence".into(),
        p_sp_limit_sequence(system, &sc.alpha_grid, &sc.c_grid, &sc.n_range)?,
    );
    if system.coding.is_some() {
        report.pressures.insert(
            "sup_transfer_phi_n".into(),
            sup_seq_pressure(system, &sc.k_powers, &SeqEstimator::Transfer { depth: depth_max })?,
        );
        let (measure, value) = maximize_free_energy(system, &Potential::PhiU, depth_max)?;
        let integral =
            potential_integral(&measure, system, &Potential::PhiU, sc.samples, sc.seed)?;
        let lyapunov = measure_lyapunov(system, &measure, sc.samples, sc.seed)?;
        report.measures.push(MeasureSummary {
            potential: "phi_u".into(),
            depth: depth_max,
            free_energy: value,
            entropy: entropy(&measure),
            integral,
            lyapunov: Some(lyapunov),
        });
    } else {
        report
            .notes
            .push("system has no Markov coding; transfer and variational estimates skipped".into());
    }
    Ok(())
}

/// The six estimators of the common pressure value, plus their max pairwise
/// gap. Requires a coded system.
pub fn compare_pressures(system: &MapSystem, sc: &Scenario) -> Result<Comparison> {
    if system.coding.is_none() {
        return Err(Error::MissingCoding(system.label.clone()));
    }
    let depth_max = *sc.depths.iter().max().unwrap();
    let finest = FiltrationParams {
        alpha: *sc.alpha_grid.last().unwrap(),
        c: *sc.c_grid.last().unwrap(),
        k_max: 0,
    };

    let saddle_filtered =
        p_sp_limit(system, &Potential::PhiU, &sc.alpha_grid, &sc.c_grid, &sc.n_range)?;
    let periodic = p_periodic(system, &Potential::PhiU, &sc.n_range)?;

    // variational supremum over the full system and any sub-shift restrictions,
    // each candidate's equilibrium measure verified hyperbolic
    let mut candidates: Vec<(String, MapSystem)> = vec![("full".into(), system.clone())];
    for (i, sub) in sc.subsystems.iter().enumerate() {
        let label = sub.label.clone().unwrap_or_else(|| format!("subshift_{i}"));
        candidates.push((label, system.restrict_coding(&sub.symbols, sub.transition.clone())?));
    }
    let mut variational = f64::NEG_INFINITY;
    let mut variational_note = String::new();
    for (label, cand) in &candidates {
        let (measure, value) = maximize_free_energy(cand, &Potential::PhiU, depth_max)?;
        let ml = measure_lyapunov(cand, &measure, sc.samples.max(1000), sc.seed)?;
        if value > variational {
            variational = value;
            variational_note = format!("{label}: hyperbolic={:?}", ml.hyperbolic);
        }
    }

    let sup_transfer =
        sup_seq_pressure(system, &sc.k_powers, &SeqEstimator::Transfer { depth: depth_max })?;
    let mut sup_saddle = f64::NEG_INFINITY;
    for &j in &sc.k_powers {
        let est = p_sp(system, &Potential::PhiNOverN { n: j }, &finest, &sc.n_range)?;
        sup_saddle = sup_saddle.max(est.value);
    }
    let sequence = p_sp_limit_sequence(system, &sc.alpha_grid, &sc.c_grid, &sc.n_range)?;

    Ok(Comparison::new(vec![
        ComparisonRow {
            name: "saddle_filtered_phi_u".into(),
            value: saddle_filtered.value,
            note: None,
        },
        ComparisonRow { name: "periodic_phi_u".into(), value: periodic.value, note: None },
        ComparisonRow {
            name: "variational_phi_u".into(),
            value: variational,
            note: Some(variational_note),
        },
        ComparisonRow { name: "sup_transfer_phi_n".into(), value: sup_transfer.value, note: None },
        ComparisonRow { name: "sup_saddle_phi_n".into(), value: sup_saddle, note: None },
        ComparisonRow { name: "saddle_sequence".into(), value: sequence.value, note: None },
    ]))
}

fn run_hypotheses(system: &MapSystem, sc: &Scenario, report: &mut Report) -> Result<()> {
    if system.dim != 2 || system.coding.is_none() {
        report
            .notes
            .push("hypothesis checks need a coded surface map; skipped".into());
        return Ok(());
    }
    let depth_max = *sc.depths.iter().max().unwrap();
    report.hypotheses = Some(check_hypotheses(system, &sc.k_powers, depth_max, sc.max_period)?);
    Ok(())
}

fn run_invariant_suite(system: &MapSystem, sc: &Scenario, report: &mut Report) -> Result<()> {
    let mut results = Vec::new();

    // the singular-value potential sequence is super-additive along orbits
    let points = sample_invariant_points(system, 25, sc.seed)?;
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for x in &points {
        for n in 1..=4usize {
            for m in 1..=4usize {
                let whole = phi_n(system, x, n + m)?;
                let mut y = system.domain.normalize(x);
                for _ in 0..n {
                    y = system.forward(&y).map_err(|_| Error::Escape { index: 0 })?;
                }
                let split = phi_n(system, x, n)? + phi_n(system, &y, m)?;
                let slack = whole - split;
                worst = worst.min(slack);
                if slack < -1e-9 {
                    violations += 1;
                }
            }
        }
    }
    results.push(InvariantResult {
        name: "super_additivity".into(),
        passed: violations == 0,
        detail: format!("{} point/split checks, worst slack {worst:.3e}", points.len() * 16),
    });

    // pressure of the unstable potential is nonpositive (within slack)
    let ruelle = p_periodic(system, &Potential::PhiU, &sc.n_range)?;
    results.push(InvariantResult {
        name: "nonpositive_phi_u_pressure".into(),
        passed: ruelle.value <= NONPOSITIVITY_SLACK,
        detail: format!("periodic-sum estimate {:.6}", ruelle.value),
    });

    // per-point sequence weight never exceeds the unstable Birkhoff weight
    let finest = FiltrationParams {
        alpha: *sc.alpha_grid.last().unwrap(),
        c: *sc.c_grid.last().unwrap(),
        k_max: 0,
    };
    let mut dominated = true;
    let mut dom_detail = String::new();
    for &n in sc.n_range.iter().take(6) {
        let seq = q_sp_sequence(system, n, &finest)?;
        let phiu = q_sp(system, n, &Potential::PhiU, &finest)?;
        if seq > phiu * (1.0 + 1e-12) + 1e-300 {
            dominated = false;
            dom_detail = format!("n={n}: sequence sum {seq} > unstable sum {phiu}");
            break;
        }
    }
    results.push(InvariantResult {
        name: "sequence_dominated_by_phi_u".into(),
        passed: dominated,
        detail: if dominated { "all checked n".into() } else { dom_detail },
    });

    // equilibrium measure is a valid stationary chain and its free energy
    // decomposes as entropy + integral (checked inside the maximizer)
    if system.coding.is_some() {
        let depth_max = *sc.depths.iter().max().unwrap();
        let outcome = maximize_free_energy(system, &Potential::PhiU, depth_max);
        results.push(InvariantResult {
            name: "equilibrium_consistency".into(),
            passed: outcome.is_ok(),
            detail: match &outcome {
                Ok((_, v)) => format!("free energy {v:.6}"),
                Err(e) => e.to_string(),
            },
        });
    }

    report.invariants.extend(results);
    Ok(())
}

// ---------------------------------------------------------------------------
// entry points

/// Runs every experiment of the scenario (in canonical order), writes
/// report.json and tables/*.csv into `output_dir`, and returns the report.
/// Invariant failures are written into the report before the error surfaces.
pub fn run_scenario(
    scenario: &Scenario,
    output_dir: &Path,
    cache_dir: Option<&Path>,
) -> Result<Report> {
    scenario.validate()?;
    let system = make_system(&scenario.system)?;
    std::fs::create_dir_all(output_dir.join("tables"))?;
    let mut report = Report::new(scenario);

    let order = [
        Experiment::Enumerate,
        Experiment::Pressures,
        Experiment::Compare,
        Experiment::Hypotheses,
        Experiment::InvariantSuite,
    ];
    for exp in order {
        if !scenario.experiments.contains(&exp) {
            continue;
        }
        match exp {
            Experiment::Enumerate => {
                run_enumerate(&system, scenario, &mut report, output_dir, cache_dir)?
            }
            Experiment::Pressures => run_pressures(&system, scenario, &mut report)?,
            Experiment::Compare => report.comparison = Some(compare_pressures(&system, scenario)?),
            Experiment::Hypotheses => run_hypotheses(&system, scenario, &mut report)?,
            Experiment::InvariantSuite => {
                run_invariant_suite(&system, scenario, &mut report)?
            }
        }
    }

    for (key, est) in &report.pressures {
        write_table(&output_dir.join("tables").join(format!("{}.csv", sanitize(key))), &est.records)?;
    }
    report.write(&output_dir.join("report.json"))?;

    if let Some(failed) = report.invariants.iter().find(|r| !r.passed) {
        return Err(Error::AssertionFailed {
            name: failed.name.clone(),
            detail: failed.detail.clone(),
        });
    }
    Ok(report)
}

/// Re-runs the report's embedded scenario into a scratch directory and checks
/// that the fresh report (modulo timestamp) and every table match byte for
/// byte. Returns the list of mismatched artifacts (empty = verified).
pub fn verify_report(report_path: &Path) -> Result<Vec<String>> {
    let original = Report::read(report_path)?;
    let base = report_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let scratch = tempfile::tempdir()?;
    run_scenario(&original.config, scratch.path(), None)?;
    let mut mismatches = Vec::new();
    if !reports_match(report_path, &scratch.path().join("report.json"))? {
        mismatches.push("report.json".into());
    }
    for entry in std::fs::read_dir(scratch.path().join("tables"))? {
        let entry = entry?;
        let name = entry.file_name();
        let ours = std::fs::read(entry.path())?;
        let theirs = std::fs::read(base.join("tables").join(&name)).unwrap_or_default();
        if ours != theirs {
            mismatches.push(format!("tables/{}", name.to_string_lossy()));
        }
    }
    Ok(mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SystemSpec;

    fn scenario(system: SystemSpec, experiments: Vec<Experiment>) -> Scenario {
        serde_json::from_value(serde_json::json!({
            "schema": 1,
            "system": serde_json::to_value(&system).unwrap(),
            "experiments": serde_json::to_value(&experiments).unwrap(),
            "n_range": [1, 2, 3, 4, 5, 6],
            "samples": 1000,
            "max_period": 4,
        }))
        .unwrap()
    }

    #[test]
    fn compare_horseshoe_all_near_log_half() {
        let sc = scenario(
            SystemSpec::Horseshoe { s: 2, beta: 4.0, gamma: 0.25 },
            vec![Experiment::Compare],
        );
        let system = make_system(&sc.system).unwrap();
        let c = compare_pressures(&system, &sc).unwrap();
        assert_eq!(c.rows.len(), 6);
        for row in &c.rows {
            assert!(
                (row.value + 2.0f64.ln()).abs() < 0.02,
                "{}: {}",
                row.name,
                row.value
            );
        }
        assert!(c.max_gap < 0.02);
    }

    #[test]
    fn run_scenario_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(
            SystemSpec::Horseshoe { s: 2, beta: 4.0, gamma: 0.25 },
            vec![Experiment::Enumerate, Experiment::Pressures, Experiment::InvariantSuite],
        );
        let report = run_scenario(&sc, dir.path(), None).unwrap();
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("orbits.cache").exists());
        assert!(!report.pressures.is_empty());
        assert!(report.invariants.iter().all(|r| r.passed));
        let tables: Vec<_> = std::fs::read_dir(dir.path().join("tables")).unwrap().collect();
        assert_eq!(tables.len(), report.pressures.len());
    }

    #[test]
    fn verify_detects_match_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(
            SystemSpec::Horseshoe { s: 2, beta: 4.0, gamma: 0.25 },
            vec![Experiment::Pressures],
        );
        run_scenario(&sc, dir.path(), None).unwrap();
        let report_path = dir.path().join("report.json");
        assert!(verify_report(&report_path).unwrap().is_empty());
        // tamper with a table: verify must notice
        let table = std::fs::read_dir(dir.path().join("tables"))
            .unwrap()
            .next()
            .unwrap()
            .unwrap()
            .path();
        std::fs::write(&table, "n,count,value\n").unwrap();
        assert!(!verify_report(&report_path).unwrap().is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::ConfigSchema { field: "x".into(), detail: "d".into() }),
            2
        );
        assert_eq!(
            exit_code(&Error::AssertionFailed { name: "x".into(), detail: "d".into() }),
            3
        );
        assert_eq!(exit_code(&Error::EnumerationMissing { n: 3 }), 1);
    }
}
