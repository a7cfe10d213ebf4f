//! Serializable reports and their plain-text rendering.

use std::fmt::Write as _;

use g2flow_core::boundary::{BoundaryReport, ConditionCheck, ManifoldCatalogEntry, PeriodicityReport};
use g2flow_core::cohom1::ResidualReport;
use g2flow_core::orbits::RelationCheck;
use serde::Serialize;

use crate::format::fmt_f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Named {
    pub name: String,
    pub value: f64,
}

fn named(v: &[(String, f64)]) -> Vec<Named> {
    v.iter().map(|(name, value)| Named { name: name.clone(), value: *value }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub class: String,
    pub lambda: Option<f64>,
    pub max_abs: f64,
    pub tolerance: f64,
    pub passes: bool,
    /// Component with the largest sup-norm.
    pub dominant: Option<String>,
    pub components: Vec<Named>,
    pub cross_check: f64,
    pub diagnostics: Vec<Named>,
}

impl ResidualSummary {
    pub fn new(r: &ResidualReport, tolerance: f64) -> Self {
        let dominant = r
            .components
            .iter()
            .fold(None::<&(String, f64)>, |best, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            })
            .map(|c| c.0.clone());
        ResidualSummary {
            class: r.class.as_str().to_string(),
            lambda: r.lambda,
            max_abs: r.max_abs,
            tolerance,
            passes: r.passes(tolerance),
            dominant,
            components: named(&r.components),
            cross_check: r.cross_check,
            diagnostics: named(&r.diagnostics),
        }
    }

    fn render(&self, out: &mut String) {
        let verdict = if self.passes { "PASS" } else { "FAIL" };
        let _ = write!(out, "residual {}: max {:.3e} (tol {:.1e}) {verdict}", self.class, self.max_abs, self.tolerance);
        if let Some(l) = self.lambda {
            let _ = write!(out, " lambda={}", fmt_f64(l));
        }
        out.push('\n');
        if let Some(d) = &self.dominant {
            let _ = writeln!(out, "  dominant: {d}");
        }
        for c in &self.components {
            let _ = writeln!(out, "  {}: {:.3e}", c.name, c.value);
        }
        let _ = writeln!(out, "  cross-check: {:.3e}", self.cross_check);
        for c in &self.diagnostics {
            let _ = writeln!(out, "  [diagnostic] {}: {:.3e}", c.name, c.value);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSummary {
    pub name: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub family: String,
    pub model: String,
    pub samples: usize,
    pub interval: [f64; 2],
    pub parameters: Vec<Named>,
    pub status: String,
    pub halted_at: Option<EventSummary>,
    pub events: Vec<EventSummary>,
    /// Drift of the three conserved quantities of the cosymplectic flow.
    pub first_integral_drift: Option<f64>,
    pub residuals: Vec<ResidualSummary>,
    pub output: Option<String>,
    pub passes: bool,
}

impl SolveReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "family: {}", self.family);
        let _ = writeln!(out, "model: {}", self.model);
        let _ = writeln!(out, "samples: {}", self.samples);
        let _ = writeln!(out, "interval: [{}, {}]", fmt_f64(self.interval[0]), fmt_f64(self.interval[1]));
        for p in &self.parameters {
            let _ = writeln!(out, "{}: {}", p.name, fmt_f64(p.value));
        }
        let _ = writeln!(out, "status: {}", self.status);
        if let Some(h) = &self.halted_at {
            let _ = writeln!(out, "halted at {} t={}", h.name, fmt_f64(h.t));
        }
        for e in &self.events {
            let _ = writeln!(out, "event {} t={}", e.name, fmt_f64(e.t));
        }
        if let Some(d) = self.first_integral_drift {
            let _ = writeln!(out, "first-integral drift: {d:.3e}");
        }
        for r in &self.residuals {
            r.render(&mut out);
        }
        if let Some(o) = &self.output {
            let _ = writeln!(out, "wrote {o}");
        }
        let _ = writeln!(out, "result: {}", if self.passes { "PASS" } else { "FAIL" });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub file: String,
    pub model: String,
    pub samples: usize,
    pub residuals: Vec<ResidualSummary>,
    pub passes: bool,
}

impl CheckReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "file: {}", self.file);
        let _ = writeln!(out, "model: {}", self.model);
        let _ = writeln!(out, "samples: {}", self.samples);
        for r in &self.residuals {
            r.render(&mut out);
        }
        let _ = writeln!(out, "result: {}", if self.passes { "PASS" } else { "FAIL" });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationSummary {
    pub relation: String,
    pub defect: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub model: String,
    pub tolerance: f64,
    pub relations: Vec<RelationSummary>,
    pub passes: bool,
}

impl VerifyReport {
    pub fn new(model: &str, checks: &[RelationCheck], tolerance: f64) -> Self {
        let relations: Vec<RelationSummary> = checks
            .iter()
            .map(|c| RelationSummary { relation: c.relation.clone(), defect: c.defect, passes: c.passes(tolerance) })
            .collect();
        let passes = relations.iter().all(|r| r.passes);
        VerifyReport { model: model.to_string(), tolerance, relations, passes }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.model);
        for r in &self.relations {
            let v = if r.passes { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{v} {} (defect {:.3e})", r.relation, r.defect);
        }
        let _ = writeln!(out, "result: {}", if self.passes { "PASS" } else { "FAIL" });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub orbit: String,
    pub anchor: String,
    pub max_defect: f64,
    pub passes: bool,
    pub residuals: Vec<Named>,
    pub margins: Vec<Named>,
}

impl ConditionSummary {
    fn new(c: &ConditionCheck) -> Self {
        ConditionSummary {
            orbit: c.orbit_name.clone(),
            anchor: c.anchor.to_string(),
            max_defect: c.max_defect,
            passes: c.passes,
            residuals: named(&c.residuals),
            margins: named(&c.margins),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicitySummary {
    pub element: String,
    pub period: f64,
    pub radii_defect: f64,
    pub theta_defect: f64,
    pub reverses_orientation: bool,
}

impl PeriodicitySummary {
    fn new(p: &PeriodicityReport) -> Self {
        PeriodicitySummary {
            element: p.element.clone(),
            period: p.period,
            radii_defect: p.radii_defect,
            theta_defect: p.theta_defect,
            reverses_orientation: p.reverses_orientation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSummary {
    pub label: String,
    pub base: String,
    pub existence: String,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub file: String,
    pub column: String,
    pub label: Option<String>,
    pub summary: String,
    pub interval_length: f64,
    pub residuals: Vec<ResidualSummary>,
    pub start: Vec<ConditionSummary>,
    pub end: Vec<ConditionSummary>,
    pub periodicity: Vec<PeriodicitySummary>,
    pub candidates: Vec<CandidateSummary>,
    pub notes: Vec<String>,
    pub passes: bool,
}

impl ClassifyReport {
    pub fn new(file: &str, r: &BoundaryReport, residual_tol: f64) -> Self {
        let candidates: Vec<CandidateSummary> = r
            .candidates
            .iter()
            .map(|c| CandidateSummary {
                label: c.manifold_label.to_string(),
                base: c.base.as_str().to_string(),
                existence: c.existence.as_str().to_string(),
                consistent: c.consistent,
            })
            .collect();
        let passes = r.manifold_label.is_some() && candidates.iter().all(|c| c.consistent);
        ClassifyReport {
            file: file.to_string(),
            column: r.column.as_str().to_string(),
            label: r.manifold_label.map(str::to_string),
            summary: r.summary(),
            interval_length: r.interval_length,
            residuals: r.residuals.iter().map(|x| ResidualSummary::new(x, residual_tol)).collect(),
            start: r.start.iter().map(ConditionSummary::new).collect(),
            end: r.end.iter().map(ConditionSummary::new).collect(),
            periodicity: r.periodicity.iter().map(PeriodicitySummary::new).collect(),
            candidates,
            notes: r.notes.clone(),
            passes,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.summary);
        let _ = writeln!(out, "column: {}", self.column);
        let _ = writeln!(out, "interval length: {}", fmt_f64(self.interval_length));
        for c in &self.candidates {
            let _ = writeln!(
                out,
                "candidate: {} ({}, {}{})",
                c.label,
                c.base,
                c.existence,
                if c.consistent { "" } else { ", inconsistent with the table" }
            );
        }
        for (side, checks) in [("start", &self.start), ("end", &self.end)] {
            for c in checks {
                let v = if c.passes { "match" } else { "no" };
                let _ = write!(out, "{side} {}: {v} (defect {:.3e}", c.orbit, c.max_defect);
                for m in &c.margins {
                    let _ = write!(out, ", {}={:.3e}", m.name, m.value);
                }
                out.push_str(")\n");
            }
        }
        for p in &self.periodicity {
            let _ = writeln!(
                out,
                "periodicity {}: radii {:.3e}, theta {:.3e}{}",
                p.element,
                p.radii_defect,
                p.theta_defect,
                if p.reverses_orientation { " (reverses orientation)" } else { "" }
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        for r in &self.residuals {
            r.render(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRow {
    pub symmetry: String,
    pub manifold: String,
    pub principal_orbit: String,
    pub base: String,
    pub holonomy_symplectic: String,
    pub weak_holonomy: String,
    pub cosymplectic: String,
}

impl CatalogRow {
    pub fn new(e: &ManifoldCatalogEntry) -> Self {
        CatalogRow {
            symmetry: e.symmetry.as_str().to_string(),
            manifold: e.manifold_label.to_string(),
            principal_orbit: e.principal_orbit.to_string(),
            base: e.base.as_str().to_string(),
            holonomy_symplectic: e.holonomy_symplectic.as_str().to_string(),
            weak_holonomy: e.weak_holonomy.as_str().to_string(),
            cosymplectic: e.cosymplectic.as_str().to_string(),
        }
    }
}

pub const CATALOG_HEADER: [&str; 7] =
    ["symmetry", "manifold", "principal_orbit", "base", "holonomy_symplectic", "weak_holonomy", "cosymplectic"];

pub fn catalog_csv(rows: &[CatalogRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CATALOG_HEADER).expect("in-memory write");
    for r in rows {
        w.serialize((
            &r.symmetry,
            &r.manifold,
            &r.principal_orbit,
            &r.base,
            &r.holonomy_symplectic,
            &r.weak_holonomy,
            &r.cosymplectic,
        ))
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 labels")
}
