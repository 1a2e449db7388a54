//! Report bundle output: `report.json`, CSV tables, and a plain-text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::grading::Grade;
use crate::io;
use crate::pipeline::ReportBundle;

pub const BUNDLE_FILE: &str = "report.json";

/// Percent with two decimals, e.g. `0.95387 → "95.39"`.
pub fn percent(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Fraction with four decimals, e.g. `"0.0536"`.
pub fn fraction(x: f64) -> String {
    format!("{x:.4}")
}

fn optional(x: Option<f64>) -> String {
    x.map(fraction).unwrap_or_else(|| "undefined".into())
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json` and the CSV tables for every populated section.
pub fn write_bundle(out: &Path, bundle: &ReportBundle) -> Result<()> {
    fs::create_dir_all(out)?;
    io::save_json(&out.join(BUNDLE_FILE), bundle)?;
    if !bundle.performance.is_empty() {
        let rows = bundle
            .performance
            .iter()
            .map(|r| {
                let e = &r.report;
                vec![
                    r.model.to_string(),
                    r.setting.clone(),
                    e.n.to_string(),
                    e.tp.to_string(),
                    e.fp.to_string(),
                    e.tn.to_string(),
                    e.fn_.to_string(),
                    percent(e.accuracy),
                    percent(e.precision),
                    percent(e.recall),
                    fraction(e.f1),
                    optional(e.auc),
                ]
            })
            .collect();
        write_csv(
            &out.join("performance.csv"),
            &[
                "model",
                "setting",
                "n",
                "tp",
                "fp",
                "tn",
                "fn",
                "accuracy_pct",
                "precision_pct",
                "recall_pct",
                "f1",
                "auc",
            ],
            rows,
        )?;
    }
    if !bundle.default_rate.is_empty() {
        let rows = bundle
            .default_rate
            .iter()
            .map(|r| {
                vec![
                    r.year.to_string(),
                    r.companies.to_string(),
                    r.defaults.to_string(),
                    percent(r.rate),
                ]
            })
            .collect();
        write_csv(
            &out.join("default_rate.csv"),
            &["year", "companies", "defaults", "rate_pct"],
            rows,
        )?;
    }
    if let Some(g) = &bundle.grading {
        let rows = Grade::ALL
            .iter()
            .zip(&g.confusion.matrix)
            .map(|(grade, counts)| {
                let mut row = vec![grade.to_string()];
                row.extend(counts.iter().map(usize::to_string));
                row
            })
            .collect();
        write_csv(
            &out.join("grade_confusion.csv"),
            &["reference", "A", "B", "C", "D", "E", "F"],
            rows,
        )?;
    }
    if let Some(a) = &bundle.attribution {
        let rows = a
            .ranking
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let j = a
                    .players
                    .iter()
                    .position(|p| p == name)
                    .expect("ranked player exists");
                vec![
                    (i + 1).to_string(),
                    name.clone(),
                    format!("{:.6}", a.global_importance[j]),
                ]
            })
            .collect();
        write_csv(
            &out.join("importance.csv"),
            &["rank", "feature", "mean_abs_shap"],
            rows,
        )?;
    }
    if let Some(al) = &bundle.alignment {
        let rows = al
            .deltas
            .iter()
            .map(|d| {
                let rank = |r: &crate::alignment::Ranking| {
                    r.entries
                        .iter()
                        .position(|e| e.feature == d.feature)
                        .map(|i| i + 1)
                        .unwrap_or(0)
                        .to_string()
                };
                vec![
                    d.feature.clone(),
                    rank(&al.expert_ranking),
                    rank(&al.model_ranking),
                    percent(d.expert_share),
                    percent(d.model_share),
                    percent(d.delta),
                ]
            })
            .collect();
        write_csv(
            &out.join("alignment.csv"),
            &[
                "feature",
                "expert_rank",
                "model_rank",
                "expert_share_pct",
                "model_share_pct",
                "delta_pct",
            ],
            rows,
        )?;
    }
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<ReportBundle> {
    let path = if dir.is_dir() {
        dir.join(BUNDLE_FILE)
    } else {
        dir.to_path_buf()
    };
    io::load_json(&path)
}

/// Human-readable summary of a bundle. Empty sections are listed as skipped.
pub fn format_report(bundle: &ReportBundle) -> String {
    let mut s = String::new();
    let skipped = |s: &mut String, name: &str| {
        let _ = writeln!(s, "== {name} ==\n(section not produced by this run)\n");
    };

    if let Some(d) = &bundle.data {
        let _ = writeln!(s, "== Data ==");
        let _ = writeln!(
            s,
            "records {}  labeled {}  unusable {}  out-of-range {}",
            d.records, d.labeled, d.unusable, d.out_of_range
        );
        for (name, split) in [
            ("train", &d.train),
            ("test", &d.test),
            ("validation", &d.validation),
            ("train (SMOTE)", &d.resampled_train),
        ] {
            let _ = writeln!(
                s,
                "{name:<14} rows {:>7}  defaults {:>5}",
                split.rows, split.positives
            );
        }
        if !d.rejections.is_empty() {
            let parts: Vec<String> = d
                .rejections
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(s, "rejected: {}", parts.join(", "));
        }
        let _ = writeln!(s);
    } else {
        skipped(&mut s, "Data");
    }

    if bundle.default_rate.is_empty() {
        skipped(&mut s, "Default rate by year");
    } else {
        let _ = writeln!(s, "== Default rate by year ==");
        for r in &bundle.default_rate {
            let _ = writeln!(
                s,
                "{}  {:>6} companies  {:>4} defaults  {:>6}%",
                r.year,
                r.companies,
                r.defaults,
                percent(r.rate)
            );
        }
        let _ = writeln!(s);
    }

    if bundle.performance.is_empty() {
        skipped(&mut s, "Performance");
    } else {
        let _ = writeln!(
            s,
            "== Performance (threshold {}) ==",
            bundle.performance[0].report.threshold
        );
        let _ = writeln!(
            s,
            "{:<20} {:<7} {:>9} {:>10} {:>8} {:>7} {:>7}",
            "model", "setting", "accuracy", "precision", "recall", "F1", "AUC"
        );
        for r in &bundle.performance {
            let e = &r.report;
            let _ = writeln!(
                s,
                "{:<20} {:<7} {:>9} {:>10} {:>8} {:>7} {:>7}",
                r.model.label(),
                r.setting,
                percent(e.accuracy),
                percent(e.precision),
                percent(e.recall),
                fraction(e.f1),
                optional(e.auc)
            );
        }
        let _ = writeln!(s);
    }

    if let Some(a) = &bundle.attribution {
        let _ = writeln!(
            s,
            "== Feature importance ({} {}, {} instances) ==",
            a.model.label(),
            a.sampling.as_str().to_uppercase(),
            a.instances
        );
        for (i, name) in a.ranking.iter().enumerate() {
            let j = a.players.iter().position(|p| p == name).unwrap_or(0);
            let _ = writeln!(
                s,
                "{:>2}. {:<20} {:.6}",
                i + 1,
                name,
                a.global_importance[j]
            );
        }
        let _ = writeln!(s, "max efficiency gap {:.3e}\n", a.max_efficiency_gap);
    } else {
        skipped(&mut s, "Feature importance");
    }

    if let Some(g) = &bundle.grading {
        let _ = writeln!(
            s,
            "== Grade mapping ({} {}, {}) ==",
            g.model.label(),
            g.sampling.as_str().to_uppercase(),
            g.mode
        );
        for iv in &g.intervals {
            let _ = writeln!(s, "{}  [{:.4}, {:.4}]", iv.grade, iv.lower, iv.upper);
        }
        let _ = writeln!(
            s,
            "reference \\ mapped   A      B      C      D      E      F"
        );
        for (grade, row) in Grade::ALL.iter().zip(&g.confusion.matrix) {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
            let _ = writeln!(s, "{grade:<19}{}", cells.join(" "));
        }
        let c = &g.confusion;
        let _ = writeln!(
            s,
            "n {}  riskier {}%  safer {}%  equal {}%  critical underestimation {}  unmatched {}\n",
            c.n,
            percent(c.riskier),
            percent(c.safer),
            percent(c.equal),
            c.critical_underestimation,
            g.unmatched
        );
    } else {
        skipped(&mut s, "Grade mapping");
    }

    if let Some(al) = &bundle.alignment {
        let _ = writeln!(s, "== Expert alignment ==");
        let _ = writeln!(
            s,
            "Spearman {}  Kendall tau {}  top-3 overlap {}  top-5 overlap {}",
            optional(al.spearman),
            optional(al.kendall_tau),
            fraction(al.top3_overlap),
            fraction(al.top5_overlap)
        );
        let _ = writeln!(
            s,
            "{:<20} {:>8} {:>8} {:>8}",
            "feature", "expert%", "model%", "delta%"
        );
        for d in &al.deltas {
            let _ = writeln!(
                s,
                "{:<20} {:>8} {:>8} {:>8}",
                d.feature,
                percent(d.expert_share),
                percent(d.model_share),
                percent(d.delta)
            );
        }
        for a in &al.per_analyst {
            let _ = writeln!(
                s,
                "{:<12} Spearman {}  Kendall tau {}  top-3 {}  top-5 {}",
                a.analyst,
                optional(a.spearman),
                optional(a.kendall_tau),
                fraction(a.top3_overlap),
                fraction(a.top5_overlap)
            );
        }
        let _ = writeln!(s);
    } else {
        skipped(&mut s, "Expert alignment");
    }
    s
}
