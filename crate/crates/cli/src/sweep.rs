//! Sweep orchestration and CSV emission.

use crate::error::CliError;
use crate::scenario_file::{Metric, ScenarioFile, Series, SweepKind};
use noma_core::diagnostics::{Diagnostic, Evaluated};
use noma_core::ergodic::{self, ErgodicOptions};
use noma_core::mc::{simulate_ergodic, simulate_outage, McEstimate, McRun, OutageMetric};
use noma_core::outage;
use noma_core::scenario::{threshold_to_rate, ScenarioConfig};
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Closed,
    Mc,
    Both,
}

impl Mode {
    fn closed(self) -> bool {
        matches!(self, Mode::Closed | Mode::Both)
    }

    fn mc(self) -> bool {
        matches!(self, Mode::Mc | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub mode: Mode,
    /// Overrides `[mc] iterations`.
    pub iterations: Option<u64>,
    /// Overrides `[mc] seed`.
    pub seed: Option<u64>,
    pub jitter_degenerate: bool,
}

impl SweepOptions {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            iterations: None,
            seed: None,
            jitter_degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub message: String,
    pub validation: bool,
}

impl From<&CliError> for RowError {
    fn from(e: &CliError) -> Self {
        RowError {
            message: e.to_string(),
            validation: e.exit_code() == 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis: f64,
    pub metric: String,
    pub closed_form: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub agree_3sigma: Option<bool>,
    pub wall_ms: f64,
    pub series: Option<String>,
    pub method: String,
    pub error: Option<RowError>,
}

pub const CSV_HEADER: [&str; 10] = [
    "axis",
    "metric",
    "closed_form",
    "mc_mean",
    "mc_stderr",
    "agree_3sigma",
    "wall_ms",
    "series",
    "method",
    "error",
];

/// R_th·(1 − P_out).
pub fn achievable(rate_threshold_bits: f64, outage: f64) -> f64 {
    rate_threshold_bits * (1.0 - outage)
}

/// Achievable individual and sum rates from the closed-form outages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AchievableReport {
    pub outage: [f64; 3],
    pub achievable: [f64; 3],
}

pub fn report_achievable(sc: &ScenarioConfig) -> Result<AchievableReport, CliError> {
    let th = sc.thresholds;
    let outage = [
        outage::outage_user(sc, 1)?.value,
        outage::outage_user(sc, 2)?.value,
        outage::outage_sum(sc)?.value,
    ];
    let rates = [th.gamma1, th.gamma2, th.gamma_sum].map(threshold_to_rate);
    Ok(AchievableReport {
        outage,
        achievable: [0, 1, 2].map(|i| achievable(rates[i], outage[i])),
    })
}

fn diagnostic_tag(d: &Diagnostic) -> String {
    match d {
        Diagnostic::Clamped { excursion } => format!("clamped({excursion:.1e})"),
        Diagnostic::BackhaulQuadratureFallback { condition } => format!("backhaul-quadrature(cond={condition:.1e})"),
        Diagnostic::SymmetricPerturbation { delta_db } => format!("symmetric-perturbation({delta_db}dB)"),
        Diagnostic::RecursionFallback { condition } => format!("recursion-integral(cond={condition:.1e})"),
        Diagnostic::NodeJitter { nodes } => format!("node-jitter({nodes})"),
    }
}

struct Point<'a> {
    series: Option<&'a Series>,
    axis: f64,
}

fn closed_value(
    sc: &ScenarioConfig,
    metric: Metric,
    opts: &SweepOptions,
) -> Result<Option<Evaluated>, CliError> {
    Ok(match metric {
        Metric::Outage(m) => outage::closed_form_for(sc, m)?,
        Metric::Rate(m) => ergodic::closed_form_for(
            sc,
            m,
            ErgodicOptions {
                jitter_degenerate: opts.jitter_degenerate,
            },
        )?,
    })
}

fn evaluate_point(
    file: &ScenarioFile,
    kind: SweepKind,
    axis_key: &str,
    metrics: &[Metric],
    point: &Point,
    opts: &SweepOptions,
) -> Vec<ResultRow> {
    let label = point.series.map(|s| s.label.clone());
    let blank = |metric: &str| ResultRow {
        axis: point.axis,
        metric: metric.to_string(),
        closed_form: None,
        mc_mean: None,
        mc_stderr: None,
        agree_3sigma: None,
        wall_ms: 0.0,
        series: label.clone(),
        method: String::new(),
        error: None,
    };
    let wanted: Vec<Metric> = metrics
        .iter()
        .copied()
        .filter(|&m| opts.mode.mc() || has_closed_form(m))
        .collect();

    let built = (|| {
        let mut f = file.clone();
        if let Some(s) = point.series {
            for (k, v) in &s.overrides {
                f.apply(k, *v)?;
            }
        }
        f.apply(axis_key, point.axis)?;
        if opts.jitter_degenerate {
            f.interference.jitter_degenerate = true;
        }
        let sc = f.build()?;
        let run = McRun::new(
            sc.clone(),
            opts.iterations.unwrap_or(f.mc.iterations),
            opts.seed.unwrap_or(f.mc.seed),
        )?;
        Ok::<_, CliError>((sc, run))
    })();
    let (sc, run) = match built {
        Ok(v) => v,
        Err(e) => {
            return wanted
                .iter()
                .map(|m| ResultRow {
                    error: Some(RowError::from(&e)),
                    method: "none".into(),
                    ..blank(m.name())
                })
                .collect()
        }
    };

    let (mc, mc_ms): (Option<Box<dyn Fn(Metric) -> McEstimate>>, f64) = if opts.mode.mc() {
        let start = Instant::now();
        let getter: Box<dyn Fn(Metric) -> McEstimate> = match kind {
            SweepKind::Outage => {
                let r = simulate_outage(&run);
                Box::new(move |m| match m {
                    Metric::Outage(o) => r.get(o),
                    Metric::Rate(_) => unreachable!("outage sweep"),
                })
            }
            SweepKind::Ergodic => {
                let r = simulate_ergodic(&run);
                Box::new(move |m| match m {
                    Metric::Rate(o) => r.get(o),
                    Metric::Outage(_) => unreachable!("ergodic sweep"),
                })
            }
        };
        (Some(getter), start.elapsed().as_secs_f64() * 1e3)
    } else {
        (None, 0.0)
    };

    let mut rows = Vec::with_capacity(wanted.len() + 3);
    for &metric in &wanted {
        let mut row = blank(metric.name());
        let mut tags = Vec::new();
        let mut wall = mc_ms;
        if opts.mode.closed() {
            let start = Instant::now();
            match closed_value(&sc, metric, opts) {
                Ok(Some(ev)) => {
                    row.closed_form = Some(ev.value);
                    tags.push("closed".to_string());
                    tags.extend(ev.diagnostics.iter().map(diagnostic_tag));
                }
                Ok(None) => {}
                Err(e) => row.error = Some(RowError::from(&e)),
            }
            wall += start.elapsed().as_secs_f64() * 1e3;
        }
        if let Some(get) = &mc {
            let est = get(metric);
            row.mc_mean = Some(est.mean);
            row.mc_stderr = Some(est.std_error);
            tags.insert(usize::from(row.closed_form.is_some()), "mc".to_string());
            if let Some(c) = row.closed_form {
                row.agree_3sigma = Some(est.agrees(c, 3.0));
            }
        }
        row.wall_ms = wall;
        row.method = if tags.is_empty() { "none".into() } else { tags.join(";") };
        rows.push(row);
    }

    if kind == SweepKind::Outage && file.sweep.as_ref().is_some_and(|s| s.achievable) {
        let th = sc.thresholds;
        let pairs = [
            (OutageMetric::User1, th.gamma1, "achievable_user1"),
            (OutageMetric::User2, th.gamma2, "achievable_user2"),
            (OutageMetric::Sum, th.gamma_sum, "achievable_sum"),
        ];
        for (base, gamma, name) in pairs {
            let Some(src) = rows.iter().find(|r| r.metric == base.name()).cloned() else {
                continue;
            };
            let r = threshold_to_rate(gamma);
            rows.push(ResultRow {
                metric: name.to_string(),
                closed_form: src.closed_form.map(|p| achievable(r, p)),
                mc_mean: src.mc_mean.map(|p| achievable(r, p)),
                mc_stderr: src.mc_stderr.map(|s| r * s),
                method: "derived".into(),
                ..src
            });
        }
    }
    rows
}

fn has_closed_form(m: Metric) -> bool {
    !matches!(
        m,
        Metric::Outage(OutageMetric::OmaUser1 | OutageMetric::OmaUser2 | OutageMetric::OmaSum)
            | Metric::Rate(
                noma_core::mc::RateMetricMc::OmaUser1
                    | noma_core::mc::RateMetricMc::OmaUser2
                    | noma_core::mc::RateMetricMc::OmaSum
            )
    )
}

/// Evaluates every (series, axis value) point concurrently; rows come back
/// grouped by series, then in axis order, then in metric order.
pub fn run_sweep(file: &ScenarioFile, opts: &SweepOptions) -> Result<Vec<ResultRow>, CliError> {
    let sweep = file.sweep.as_ref().ok_or_else(|| CliError::schema("missing section [sweep]"))?;
    let metrics = file.metrics();
    let series: Vec<Option<&Series>> = if sweep.series.is_empty() {
        vec![None]
    } else {
        sweep.series.iter().map(Some).collect()
    };
    let points: Vec<Point> = series
        .iter()
        .flat_map(|&s| sweep.values.iter().map(move |&axis| Point { series: s, axis }))
        .collect();
    let rows: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|p| evaluate_point(file, sweep.kind, &sweep.axis, &metrics, p, opts))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Shortest round-trip decimal, switching to exponent form outside [1e-4, 1e6).
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    for r in rows {
        w.write_record([
            format_number(r.axis),
            r.metric.clone(),
            opt(r.closed_form),
            opt(r.mc_mean),
            opt(r.mc_stderr),
            r.agree_3sigma.map(|b| b.to_string()).unwrap_or_default(),
            format!("{:.3}", r.wall_ms),
            r.series.clone().unwrap_or_default(),
            r.method.clone(),
            r.error.as_ref().map(|e| e.message.clone()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Exit status implied by row-level failures: validation beats numerical.
pub fn rows_exit_code(rows: &[ResultRow]) -> i32 {
    let errors: Vec<&RowError> = rows.iter().filter_map(|r| r.error.as_ref()).collect();
    if errors.iter().any(|e| e.validation) {
        2
    } else if errors.is_empty() {
        0
    } else {
        3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(sweep: &str) -> ScenarioFile {
        ScenarioFile::from_toml_str(&format!(
            "[backhaul.fso]\n[thresholds]\ngamma1 = 0.8\ngamma2 = 0.4\ngamma_sum = 1.2\n[mc]\niterations = 20000\n{sweep}"
        ))
        .unwrap()
    }

    #[test]
    fn achievable_limits() {
        assert_eq!(achievable(0.848, 0.0), 0.848);
        assert_eq!(achievable(0.848, 1.0), 0.0);
    }

    #[test]
    fn row_count_matches_grid() {
        let values: Vec<String> = (0..20).map(|i| format!("{}", 2.0 * i as f64)).collect();
        let f = file(&format!(
            "[sweep]\nkind = \"outage\"\naxis = \"tx_power_dbm\"\nvalues = [{}]\nmetrics = [\"outage_user1\", \"outage_sum\"]\nachievable = false\n",
            values.join(", ")
        ));
        let rows = run_sweep(&f, &SweepOptions::new(Mode::Closed)).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.windows(2).all(|w| w[0].axis <= w[1].axis));
    }

    #[test]
    fn closed_mode_skips_simulation_only_metrics() {
        let f = file("[sweep]\nkind = \"outage\"\naxis = \"tx_power_dbm\"\nvalues = [20]\nachievable = false\n");
        let rows = run_sweep(&f, &SweepOptions::new(Mode::Closed)).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.mc_mean.is_none() && r.closed_form.is_some()));
    }

    #[test]
    fn both_mode_fills_agreement_column() {
        let f = file("[sweep]\nkind = \"outage\"\naxis = \"tx_power_dbm\"\nvalues = [20]\n");
        let rows = run_sweep(&f, &SweepOptions::new(Mode::Both)).unwrap();
        assert_eq!(rows.len(), 11 + 3);
        let oma = rows.iter().find(|r| r.metric == "oma_outage_sum").unwrap();
        assert!(oma.closed_form.is_none() && oma.agree_3sigma.is_none() && oma.mc_mean.is_some());
        let u1 = rows.iter().find(|r| r.metric == "outage_user1").unwrap();
        assert!(u1.agree_3sigma.is_some());
        assert_eq!(u1.method, "closed;mc");
    }

    #[test]
    fn achievable_rows_recheck() {
        let f = file("[sweep]\nkind = \"outage\"\naxis = \"tx_power_dbm\"\nvalues = [30]\n");
        let rows = run_sweep(&f, &SweepOptions::new(Mode::Closed)).unwrap();
        let get = |m: &str| rows.iter().find(|r| r.metric == m).unwrap().closed_form.unwrap();
        let want = threshold_to_rate(0.8) * (1.0 - get("outage_user1"));
        assert!((get("achievable_user1") - want).abs() <= 1e-12);
        let sc = f.build().unwrap().with_tx_power(1.0).unwrap();
        let rep = report_achievable(&sc).unwrap();
        assert!((rep.achievable[2] - threshold_to_rate(1.2) * (1.0 - rep.outage[2])).abs() <= 1e-12);
    }

    #[test]
    fn bad_series_point_errors_the_rows_only() {
        let f = file(
            "[sweep]\nkind = \"outage\"\naxis = \"user2_distance_m\"\nvalues = [200, 50]\nmetrics = [\"outage_sum\"]\nachievable = false\n",
        );
        let rows = run_sweep(&f, &SweepOptions::new(Mode::Closed)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.as_ref().unwrap().validation);
        assert_eq!(rows_exit_code(&rows), 2);
    }

    #[test]
    fn csv_is_stable() {
        let row = ResultRow {
            axis: 10.0,
            metric: "outage_user1".into(),
            closed_form: Some(1.5e-7),
            mc_mean: None,
            mc_stderr: None,
            agree_3sigma: None,
            wall_ms: 1.0,
            series: Some("s=10".into()),
            method: "closed".into(),
            error: None,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "axis,metric,closed_form,mc_mean,mc_stderr,agree_3sigma,wall_ms,series,method,error\n\
             10,outage_user1,1.5e-7,,,,1.000,s=10,closed,\n"
        );
    }
}
