use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pclones::metrics::{
    final_loss_vs_history, first_rise, import_surface_csv, is_non_decreasing, median3, onset_iterations,
    rebound_ratio, render_loss_svg, render_series_svg, sum_over_history, Series,
};
use pclones::recall::parse_report;
use pclones::{CorrelationResult, LossSurface};

use crate::args::AnalyzeArgs;
use crate::manifest::{Manifest, MANIFEST_FILE};
use crate::train::SURFACE_FILE;

pub const REPORT_FILE: &str = "report.txt";
pub const SUM_LOSS_SVG: &str = "sum_loss.svg";

pub const RHO_THRESHOLD: f64 = -0.8;
pub const P_THRESHOLD: f64 = 0.01;
pub const SUM_RATIO_THRESHOLD: f64 = 0.2;
pub const REBOUND_THRESHOLD: f64 = 2.0;
pub const SETTLE_ITERATION: usize = 5;
pub const RISE_TOLERANCE: f64 = 0.01;
pub const ONSET_LEVELS: usize = 11;

struct Run {
    dir: PathBuf,
    label: String,
    mode: Option<String>,
    surface: LossSurface,
    sums: Vec<f64>,
    correlation: std::result::Result<CorrelationResult, String>,
    recalls: Vec<(String, usize)>,
}

impl Run {
    fn load(dir: &Path, levels: usize) -> Result<Self> {
        let surface = import_surface_csv(&dir.join(SURFACE_FILE))?;
        if surface.is_empty() {
            bail!("{} has no iterations", dir.join(SURFACE_FILE).display());
        }
        let manifest_path = dir.join(MANIFEST_FILE);
        let mode = if manifest_path.is_file() {
            Manifest::load(&manifest_path)?.get("mode").map(str::to_string)
        } else {
            None
        };
        let mut recalls = Vec::new();
        for feedback in ["raw", "onehot"] {
            let path = dir.join(format!("recall_{feedback}.txt"));
            if let Ok(text) = fs::read_to_string(&path) {
                let parsed = parse_report(&text).with_context(|| format!("malformed report {}", path.display()))?;
                recalls.push((feedback.to_string(), parsed.edit_distance));
            }
        }
        let correlation = final_loss_vs_history(&surface, levels.min(surface.levels())).map_err(|e| e.to_string());
        Ok(Run {
            dir: dir.to_path_buf(),
            label: String::new(),
            mode,
            sums: sum_over_history(&surface),
            surface,
            correlation,
            recalls,
        })
    }

    fn is(&self, mode: &str) -> bool {
        self.mode.as_deref() == Some(mode)
    }
}

/// Labels runs by mode, falling back to "run"; repeated labels get a suffix.
fn assign_labels(runs: &mut [Run]) {
    let base: Vec<String> = runs.iter().map(|r| r.mode.clone().unwrap_or_else(|| "run".into())).collect();
    for (i, run) in runs.iter_mut().enumerate() {
        let repeats = base.iter().filter(|b| **b == base[i]).count();
        let ordinal = base[..i].iter().filter(|b| **b == base[i]).count() + 1;
        run.label = if repeats > 1 { format!("{}{ordinal}", base[i]) } else { base[i].clone() };
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

struct Table {
    rows: Vec<[String; 4]>,
}

impl Table {
    fn push(&mut self, check: &str, run: &str, value: String, verdict: &str) {
        self.rows.push([check.into(), run.into(), value, verdict.into()]);
    }

    fn render(&self, out: &mut String) {
        let header = ["check", "run", "value", "verdict"].map(String::from);
        let all: Vec<&[String; 4]> = std::iter::once(&header).chain(&self.rows).collect();
        let widths: Vec<usize> = (0..4).map(|c| all.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        for r in all {
            let line = format!(
                "{:<w0$}  {:<w1$}  {:<w2$}  {}",
                r[0],
                r[1],
                r[2],
                r[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
            let _ = writeln!(out, "{}", line.trim_end());
        }
    }
}

fn describe_run(out: &mut String, run: &Run, levels: usize) {
    let s = &run.surface;
    let _ = writeln!(out, "[{}] {}", run.label, run.dir.display());
    let _ = writeln!(out, "  iterations={} history_levels={}", s.iterations(), s.levels());
    let _ = writeln!(out, "  sum_loss first={:.6} final={:.6}", run.sums[0], run.sums[run.sums.len() - 1]);
    let zero = s.column(0);
    if let Some(ratio) = rebound_ratio(&zero) {
        let min = zero.iter().copied().fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            out,
            "  zero_history final={:.6} min={:.6} final/min={:.4}",
            zero[zero.len() - 1],
            min,
            ratio
        );
    }
    let onsets = onset_iterations(s, ONSET_LEVELS);
    let _ = writeln!(out, "  onset_iteration levels 0-{}: {:?}", onsets.len().saturating_sub(1), onsets);
    match &run.correlation {
        Ok(c) => {
            let _ = writeln!(
                out,
                "  spearman levels 0-{}: rho={:.4} p={:.6}",
                levels.min(s.levels()) - 1,
                c.rho,
                c.p_value
            );
        }
        Err(e) => {
            let _ = writeln!(out, "  spearman: undefined ({e})");
        }
    }
    for (fb, d) in &run.recalls {
        let _ = writeln!(out, "  recall feedback={fb} edit_distance={d}");
    }
}

fn build_report(runs: &[Run], levels: usize) -> String {
    let mut out = String::new();
    for run in runs {
        describe_run(&mut out, run, levels);
        out.push('\n');
    }

    let mut table = Table { rows: Vec::new() };
    for run in runs {
        match &run.correlation {
            Ok(c) if run.is("target") => table.push(
                &format!("rho <= {RHO_THRESHOLD} and p < {P_THRESHOLD}"),
                &run.label,
                format!("rho={:.4} p={:.6}", c.rho, c.p_value),
                verdict(c.rho <= RHO_THRESHOLD && c.p_value < P_THRESHOLD),
            ),
            Ok(c) => table.push(
                "rank correlation (not gated)",
                &run.label,
                format!("rho={:.4} p={:.6}", c.rho, c.p_value),
                "INFO",
            ),
            Err(_) => table.push("rank correlation", &run.label, "undefined".into(), "FAIL"),
        }
        if run.is("target") {
            let zero = run.surface.column(0);
            let ratio = rebound_ratio(&zero).unwrap_or(1.0);
            table.push(
                &format!("zero-history final/min >= {REBOUND_THRESHOLD}"),
                &run.label,
                format!("{ratio:.4}"),
                verdict(ratio >= REBOUND_THRESHOLD),
            );
            let onsets: Vec<f64> = onset_iterations(&run.surface, ONSET_LEVELS).iter().map(|&i| i as f64).collect();
            let smooth = median3(&onsets);
            table.push(
                &format!("onset non-decreasing over levels 0-{}", ONSET_LEVELS - 1),
                &run.label,
                format!("{smooth:?}"),
                verdict(is_non_decreasing(&smooth)),
            );
            let rise = first_rise(&run.sums, SETTLE_ITERATION - 1, RISE_TOLERANCE);
            table.push(
                &format!("sum-loss non-increasing after iteration {SETTLE_ITERATION}"),
                &run.label,
                rise.map_or("no rise".into(), |i| format!("rises at iteration {}", i + 1)),
                verdict(rise.is_none()),
            );
        }
        for (fb, d) in &run.recalls {
            let check = format!("recall edit distance ({fb})");
            if run.is("target") {
                table.push(&check, &run.label, d.to_string(), verdict(*d == 0));
            } else {
                table.push(&check, &run.label, d.to_string(), "INFO");
            }
        }
    }

    let target = runs.iter().find(|r| r.is("target"));
    let regular = runs.iter().find(|r| r.is("regular"));
    if let (Some(t), Some(r)) = (target, regular) {
        let at = t.sums.len().min(r.sums.len());
        let ratio = t.sums[at - 1] / r.sums[at - 1];
        let _ = writeln!(
            out,
            "comparison at iteration {at}: sum_loss {}={:.6} {}={:.6} ratio={:.6}\n",
            t.label,
            t.sums[at - 1],
            r.label,
            r.sums[at - 1],
            ratio
        );
        table.push(
            &format!("sum-loss ratio < {SUM_RATIO_THRESHOLD}"),
            &format!("{}/{}", t.label, r.label),
            format!("{ratio:.6}"),
            verdict(ratio < SUM_RATIO_THRESHOLD),
        );
    }
    table.render(&mut out);
    out
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    if args.levels == 0 {
        bail!(pclones::Error::Config("--levels must be at least 1".into()));
    }
    let mut runs = args
        .runs
        .iter()
        .map(|d| Run::load(d, args.levels))
        .collect::<Result<Vec<_>>>()?;
    assign_labels(&mut runs);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    for run in &runs {
        let levels = args.levels.min(run.surface.levels());
        render_loss_svg(
            &run.surface,
            levels,
            &format!("{}: mean loss by history level 0-{}", run.label, levels - 1),
            &args.out.join(format!("{}_loss_surface.svg", run.label)),
        )?;
    }
    const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let series: Vec<Series<'_>> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| Series {
            label: r.label.clone(),
            color: COLORS[i % COLORS.len()].into(),
            values: &r.sums,
        })
        .collect();
    render_series_svg("sum of mean loss over history levels", &series, &args.out.join(SUM_LOSS_SVG))?;

    let report = build_report(&runs, args.levels);
    let path = args.out.join(REPORT_FILE);
    fs::write(&path, &report).with_context(|| format!("writing {}", path.display()))?;
    Ok(report)
}
