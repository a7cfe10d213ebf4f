//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use g2flow::expr::Expr;
use g2flow_core::boundary::{
    check_special_orbit, classify, condition, Anchor, BoundaryOptions, Existence, TableColumn,
};
use g2flow_core::cohom1::{d_phi_coefficients, residual_cosymplectic};
use g2flow_core::flows::{
    closed_form_catalog, cp2_cosymplectic_closed, euler_top_reparam, holonomy_triaxial, integrate_cosymplectic,
    integrate_cosymplectic_system, symplectic_system, weak_g2, weak_su3, BranchPolicy, FamilyKind, FamilyParams,
    FlowStatus, RootChoice, SolutionFamily,
};
use g2flow_core::g2core::{hypersurface_profile, model_three_form, recover_metric};
use g2flow_core::orbits::build_orbit_model;
use g2flow_core::{ModelId, Profile, Radii};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn orbit_gate() -> Outcome {
    let named: [(ModelId, &[&str]); 2] = [
        (ModelId::Sp2, &["dω1=½α", "dω2=α", "dβ=−2ω1ω2−ω2²"]),
        (ModelId::G2Su3, &["dω=3α", "⋆₀α=β", "dβ=−2ω²"]),
    ];
    let mut count = 0;
    let mut worst = 0.0f64;
    for id in ModelId::ALL {
        let model = build_orbit_model(id).map_err(|e| format!("{id}: {e}"))?;
        for c in model.verification() {
            ensure(c.defect < 1e-12, || format!("{id}: {} defect {:e}", c.relation, c.defect))?;
            worst = worst.max(c.defect);
            count += 1;
        }
        for (nid, names) in &named {
            if *nid == id {
                for name in *names {
                    ensure(model.verification().iter().any(|c| c.relation == *name), || {
                        format!("{id}: relation {name} not checked")
                    })?;
                }
            }
        }
    }
    Ok(format!("{count} relations, max defect {worst:.1e}"))
}

fn metric_recovery(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let theta = rng.gen_range(-2.0 * PI..2.0 * PI);
        let geom = recover_metric(&model_three_form(theta).form).map_err(|e| e.to_string())?;
        let g = geom.metric.ok_or_else(|| format!("θ = {theta}: not a G₂ form"))?;
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.matrix()[(i, j)] - want).abs());
            }
        }
    }
    ensure(worst < 1e-10, || format!("max entry error {worst:e}"))?;
    Ok(format!("100 angles, max entry error {worst:.1e}"))
}

fn random_profile(rng: &mut StdRng, model: ModelId) -> Profile {
    let n = 17;
    let t = linspace(0.0, rng.gen_range(0.5..3.0), n);
    let radius = |rng: &mut StdRng| {
        let (c, a, w, ph) = (rng.gen_range(0.5..3.0), rng.gen_range(0.0..0.4), rng.gen_range(0.2..3.0), rng.gen_range(0.0..PI));
        t.iter().map(|x| c * (1.0 + a * (w * x + ph).sin())).collect::<Vec<f64>>()
    };
    let radii = match model {
        ModelId::Su3T2 => Radii::Triaxial { f1: radius(rng), f2: radius(rng), f3: radius(rng) },
        ModelId::Sp2 => Radii::Pair { f1: radius(rng), f2: radius(rng) },
        ModelId::G2Su3 | ModelId::Su3T123 => Radii::Equal(radius(rng)),
    };
    let (a, b, c) = (rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
    let theta = t.iter().map(|x| a + b * x + c * x * x).collect();
    Profile::new(model, t, radii, theta).expect("valid random profile")
}

fn oracle_equivalence(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let model = ModelId::ALL[k % 4];
        let p = random_profile(rng, model);
        let d = d_phi_coefficients(&p).map_err(|e| e.to_string())?;
        let gap = d.discrepancy();
        ensure(gap < 1e-10, || format!("{model} profile {k}: discrepancy {gap:e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("1000 profiles, max discrepancy {worst:.1e}"))
}

fn closed_forms() -> Outcome {
    use FamilyKind::*;
    let kinds = [Flat, RoundSphere, ConstantOrbit, Cp2CosymplecticClosed, BryantSalamonCp2, BryantSalamonS4, WeakSu3];
    let mut worst = 0.0f64;
    for fam in closed_form_catalog().into_iter().filter(|f| kinds.contains(&f.kind)) {
        let p = fam.evaluate(2000).map_err(|e| format!("{}: {e}", fam.kind))?;
        for r in fam.check(&p).map_err(|e| e.to_string())? {
            ensure(r.passes(1e-8), || format!("{} {}: {:e}", fam.kind, r.class, r.max_abs))?;
            worst = worst.max(r.max_abs);
        }
    }
    Ok(format!("{} families on 2000 points, max residual {worst:.1e}", kinds.len()))
}

fn random_theta(rng: &mut StdRng) -> Expr {
    let (a, b, c) = (rng.gen_range(0.0..0.5), rng.gen_range(0.2..2.0), rng.gen_range(-0.8..0.8));
    let text = match rng.gen_range(0..3) {
        0 => format!("{c} + {a}*sin({b}*t)"),
        1 => format!("{c} + {a}*cos({b}*t)^2"),
        _ => format!("{c} - {a}*exp(-{b}*t)"),
    };
    Expr::parse(&text, "t").expect("generated expression parses")
}

fn first_integrals(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..20 {
        let mu = rng.gen_range(0.0..1.0);
        let nu = mu + rng.gen_range(0.0..1.0);
        let theta = random_theta(rng);
        let params = FamilyParams {
            mu,
            nu,
            f1_initial: (nu + rng.gen_range(0.5..2.0)).sqrt(),
            t_range: (0.0, 5.0),
            ..FamilyParams::default()
        };
        let th = |t: f64| theta.eval(t);
        for (name, sol) in [
            ("integrated", integrate_cosymplectic(&th, &params, 201, BranchPolicy::Halt)),
            ("system", integrate_cosymplectic_system(&th, &params, 201, BranchPolicy::Halt)),
        ] {
            let sol = sol.map_err(|e| format!("case {k} {name}: {e}"))?;
            ensure(sol.status == FlowStatus::Completed, || {
                format!("case {k} {name} (μ={mu}, ν={nu}, θ={theta}): {:?}", sol.status)
            })?;
            ensure(sol.drift < 1e-6, || format!("case {k} {name}: drift {:e}", sol.drift))?;
            worst = worst.max(sol.drift);
        }
    }
    Ok(format!("20 cases over t ∈ [0, 5], max drift {worst:.1e}"))
}

fn cross_parameterization() -> Outcome {
    let h = holonomy_triaxial(0.0, 1.0, (0.5, 4.0), 1.0, 2001).map_err(|e| e.to_string())?;
    let params = FamilyParams {
        mu: 0.0,
        nu: 1.0,
        f1_initial: h.f1()[0],
        t_range: (0.0, *h.t().last().expect("nonempty")),
        ..FamilyParams::default()
    };
    let sol = integrate_cosymplectic(&|_| 0.0, &params, h.len(), BranchPolicy::Halt).map_err(|e| e.to_string())?;
    ensure(sol.status.is_complete(), || format!("{:?}", sol.status))?;
    let mut worst = 0.0f64;
    for i in 0..h.len() {
        worst = worst.max((sol.profile.t()[i] - h.t()[i]).abs());
        let (a, b) = (sol.profile.radii().at(i), h.radii().at(i));
        for k in 0..3 {
            worst = worst.max((a[k] - b[k]).abs());
        }
    }
    ensure(worst < 1e-6, || format!("max pointwise gap {worst:e}"))?;
    Ok(format!("{} points, max gap {worst:.1e}", h.len()))
}

fn euler_top() -> Outcome {
    let cases = [(0.0, 1.0, (0.5, 10.0)), (0.5, 1.5, (1.0, 5.0)), (1.0, 2.0, (1.5, 5.0))];
    let mut worst = 0.0f64;
    for (mu, nu, range) in cases {
        let p = holonomy_triaxial(mu, nu, range, 1.0, 2001).map_err(|e| e.to_string())?;
        let top = euler_top_reparam(&p, 1e-8).map_err(|e| format!("μ={mu}, ν={nu}: {e}"))?;
        ensure(top.defect < 1e-6, || format!("μ={mu}, ν={nu}: defect {:e}", top.defect))?;
        worst = worst.max(top.defect);
    }
    Ok(format!("3 trajectories, max defect {worst:.1e}"))
}

fn symplectic_bound(rng: &mut StdRng) -> Outcome {
    let mut min = f64::INFINITY;
    for _ in 0..10_000 {
        // (0, 5]: 5 − [0, 5).
        let x = 5.0 - rng.gen_range(0.0..5.0);
        let y = 5.0 - rng.gen_range(0.0..5.0);
        let v = x * y + 1.0 / x + 1.0 / y;
        ensure(v >= 3.0, || format!("xy + 1/x + 1/y = {v} at ({x}, {y})"))?;
        min = min.min(v);
    }
    let (mut solved, mut rejected) = (0, 0);
    for _ in 0..2000 {
        let h = rng.gen_range(0.1..3.0);
        let dh = rng.gen_range(-2.0..2.0);
        let x = 5.0 - rng.gen_range(0.0..5.0);
        let eps = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match symplectic_system(&[0.0, 1.0], &[h, h], &[dh, dh], &[x, x], eps, RootChoice::Larger, None) {
            Ok(sol) => {
                ensure(sol.min_abs_dh >= 0.5, || format!("|h′| = {} accepted", sol.min_abs_dh))?;
                solved += 1;
            }
            Err(_) => rejected += 1,
        }
    }
    ensure(solved > 0 && rejected > 0, || format!("{solved} solved, {rejected} rejected"))?;
    Ok(format!("min over 10⁴ samples {min:.6}, {solved} systems solved with |h′| ≥ 1/2"))
}

fn classify_case(name: &str) -> Result<(Profile, Option<f64>, Option<f64>), String> {
    let fam = |kind| SolutionFamily::new(kind).evaluate(1601).map_err(|e| e.to_string());
    let sphere = |lambda: f64, span: f64| weak_g2(lambda, (0.0, span / lambda), 1601).map_err(|e| e.to_string());
    Ok(match name {
        "bryant-salamon-cp2" => (fam(FamilyKind::BryantSalamonCp2)?, None, None),
        "bryant-salamon-s4" => (fam(FamilyKind::BryantSalamonS4)?, None, None),
        "flat" => (fam(FamilyKind::Flat)?, None, None),
        "symplectic-simple" => (fam(FamilyKind::SymplecticSimple)?, None, None),
        "weak-su3" => (fam(FamilyKind::WeakSu3)?, None, None),
        "weak-su3-sp2" => (weak_su3(ModelId::Sp2, (0.2, PI - 0.2), 1601).map_err(|e| e.to_string())?, None, None),
        "round-sphere" => (sphere(4.0, 4.0 * PI)?, Some(4.0), Some(PI)),
        "round-sphere-half" => (sphere(4.0, 2.0 * PI)?, Some(4.0), Some(PI / 2.0)),
        "round-sphere-lambda-2" => (sphere(2.0, 4.0 * PI)?, Some(2.0), Some(2.0 * PI)),
        "round-sphere-lambda-2-half" => (sphere(2.0, 2.0 * PI)?, Some(2.0), Some(PI)),
        "cp2-cosymplectic-closed" => (cp2_cosymplectic_closed((0.0, PI), 1601).map_err(|e| e.to_string())?, None, None),
        "cp2-cosymplectic-half" => {
            (cp2_cosymplectic_closed((0.0, PI / 2.0), 1601).map_err(|e| e.to_string())?, None, None)
        }
        other => return Err(format!("unknown golden case {other}")),
    })
}

fn classification_goldens() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/classify.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut count = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [case, column, summary, existence] = fields[..] else {
            return Err(format!("malformed golden line '{line}'"));
        };
        let column: TableColumn = column.parse().map_err(|e| format!("{case}: {e}"))?;
        let (p, lambda, length) = classify_case(case)?;
        let report = classify(&p, column, lambda, &BoundaryOptions::default()).map_err(|e| format!("{case}: {e}"))?;
        ensure(report.summary() == summary, || format!("{case}: got '{}', want '{summary}'", report.summary()))?;
        if existence != "-" {
            let got = report.candidates.iter().find(|c| c.consistent).map(|c| c.existence);
            ensure(got.map(Existence::as_str) == Some(existence), || format!("{case}: existence {got:?}"))?;
        }
        if let Some(want) = length {
            ensure((report.interval_length - want).abs() < 1e-12, || {
                format!("{case}: interval length {} vs {want}", report.interval_length)
            })?;
        }
        count += 1;
    }
    Ok(format!("{count} golden classifications"))
}

fn nonexistence(rng: &mut StdRng) -> Outcome {
    let opts = BoundaryOptions::default();
    let mut parity_ok = 0;
    for k in 0..50 {
        // μ = ν = 0 forces f₁ = f₂ = f₃. A sine series in πt/L is odd at
        // both ends of [0, L]; θ ≡ 0 mod π at both ends plus a sine series
        // makes sin θ odd and cos θ even there too.
        let len = rng.gen_range(0.5..5.0);
        let coeffs: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let slope = 1.0 + coeffs.iter().enumerate().map(|(j, c)| (j as f64 + 2.0) * c).sum::<f64>();
        let t = linspace(0.0, len, 801);
        let f: Vec<f64> = t
            .iter()
            .map(|x| {
                let s = PI * x / len;
                let series = s.sin() + coeffs.iter().enumerate().map(|(j, c)| c * ((j as f64 + 2.0) * s).sin()).sum::<f64>();
                len / PI * series / slope
            })
            .collect();
        let (turns, wobble) = (rng.gen_range(-2i32..=2) as f64, rng.gen_range(-0.5..0.5));
        let theta: Vec<f64> = t.iter().map(|x| turns * PI * x / len + wobble * (2.0 * PI * x / len).sin()).collect();
        let p = Profile::new(ModelId::Su3T2, t, Radii::Equal(f), theta).map_err(|e| e.to_string())?;
        let mut both_ends = true;
        for anchor in [Anchor::Start, Anchor::End] {
            let mut any = false;
            for name in ["CP2_1", "CP2_2", "CP2_3"] {
                let cond = condition(ModelId::Su3T2, name).map_err(|e| e.to_string())?;
                let c = check_special_orbit(&p, anchor, &cond, &opts).map_err(|e| e.to_string())?;
                if c.max_defect < opts.tol {
                    parity_ok += 1;
                }
                any |= c.passes;
            }
            both_ends &= any;
        }
        ensure(!both_ends, || format!("attempt {k} closed on CP(2) at both ends"))?;
    }
    Ok(format!("50 attempts rejected ({parity_ok} parity-clean checks failed on fⱼ = 0 at the orbit)"))
}

fn hypersurfaces(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..10 {
        let (c, a, w, ph) = (rng.gen_range(1.0..3.0), rng.gen_range(0.0..0.6), rng.gen_range(0.3..2.0), rng.gen_range(0.0..PI));
        let r = move |s: f64| c + a * (w * s + ph).sin();
        let p = hypersurface_profile(r, (0.0, rng.gen_range(1.0..4.0)), 401).map_err(|e| format!("case {k}: {e}"))?;
        let rep = residual_cosymplectic(&p).map_err(|e| e.to_string())?;
        ensure(rep.passes(1e-8), || format!("case {k}: residual {:e}", rep.max_abs))?;
        worst = worst.max(rep.max_abs);
    }
    Ok(format!("10 profiles, max residual {worst:.1e}"))
}

fn main() -> ExitCode {
    let mut rng = StdRng::seed_from_u64(0x6732_666c_6f77);
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut StdRng) -> Outcome>)> = vec![
        ("orbit gate", Box::new(|_| orbit_gate())),
        ("metric recovery", Box::new(metric_recovery)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("closed forms", Box::new(|_| closed_forms())),
        ("first integrals", Box::new(first_integrals)),
        ("cross-parameterization", Box::new(|_| cross_parameterization())),
        ("Euler-top reduction", Box::new(|_| euler_top())),
        ("symplectic bound", Box::new(symplectic_bound)),
        ("classification goldens", Box::new(|_| classification_goldens())),
        ("nonexistence", Box::new(nonexistence)),
        ("hypersurface link", Box::new(hypersurfaces)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run(&mut rng);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
