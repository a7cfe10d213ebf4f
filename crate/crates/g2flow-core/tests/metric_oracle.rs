//! (vᵢ⌟φ)∧(vⱼ⌟φ)∧φ = 6 g(vᵢ, vⱼ) vol, with the left side evaluated by a
//! plain alternating sum over S₇ rather than through the wedge product.

use g2flow_core::g2core::{model_three_form, recover_metric};
use g2flow_core::KForm;
use proptest::prelude::*;

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..n {
            if !used[i] {
                // Inversions created by placing i after the unused smaller entries.
                let inv = (0..i).filter(|&j| !used[j]).count();
                used[i] = true;
                prefix.push(i);
                go(prefix, used, if inv % 2 == 0 { sign } else { -sign }, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], 1.0, &mut out);
    out
}

/// Fully antisymmetric component φ(e_a, e_b, e_c) from the stored
/// increasing-index coefficients.
fn component(phi: &KForm, a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    let mut idx = [a, b, c];
    let mut sign = 1.0;
    for i in 0..3 {
        for j in 0..2 - i {
            if idx[j] > idx[j + 1] {
                idx.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign * phi.term(&idx).unwrap()
}

fn brute_b(phi: &KForm, perms: &[(Vec<usize>, f64)]) -> [[f64; 7]; 7] {
    let mut b = [[0.0; 7]; 7];
    // (α∧β∧γ)(e₀,…,e₆) = 1/(2!2!3!) Σ sgn σ α(σ₀,σ₁) β(σ₂,σ₃) γ(σ₄,σ₅,σ₆).
    let norm = 1.0 / 24.0;
    for i in 0..7 {
        for j in 0..7 {
            let mut s = 0.0;
            for (p, sign) in perms {
                let x = component(phi, i, p[0], p[1]);
                if x == 0.0 {
                    continue;
                }
                let y = component(phi, j, p[2], p[3]);
                if y == 0.0 {
                    continue;
                }
                s += sign * x * y * component(phi, p[4], p[5], p[6]);
            }
            b[i][j] = s * norm;
        }
    }
    b
}

#[test]
fn permutation_sum_matches_six_times_identity() {
    let perms = permutations(7);
    assert_eq!(perms.len(), 5040);
    for theta in [0.0, 0.7, 2.0, -1.3] {
        let phi = model_three_form(theta).form;
        let b = brute_b(&phi, &perms);
        let geom = recover_metric(&phi).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 6.0 } else { 0.0 };
                assert!((b[i][j] - want).abs() < 1e-12, "θ={theta} B[{i}][{j}]={}", b[i][j]);
                assert!((geom.b_matrix[(i, j)] - b[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn permutation_sum_on_a_rescaled_form() {
    // Multiplying the v₀-terms by a is the pullback by L = diag(a, 1, …, 1),
    // so the metric is LᵀL.
    let perms = permutations(7);
    let a: f64 = 1.7;
    let mut phi = model_three_form(0.4).form;
    for (mask, _) in phi.clone().terms() {
        if mask & 1 != 0 {
            let idx: Vec<usize> = (0..7).filter(|k| mask & (1 << k) != 0).collect();
            let c = phi.term(&idx).unwrap();
            phi.add_term((a - 1.0) * c, &idx).unwrap();
        }
    }
    let b = brute_b(&phi, &perms);
    let geom = recover_metric(&phi).unwrap();
    for i in 0..7 {
        for j in 0..7 {
            assert!((geom.b_matrix[(i, j)] - b[i][j]).abs() < 1e-11);
        }
    }
    let g = geom.metric.unwrap();
    let m = g.matrix();
    assert!((m[(0, 0)] - a * a).abs() < 1e-12);
    for k in 1..7 {
        assert!((m[(k, k)] - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn recovered_metric_is_independent_of_theta(theta in -10.0f64..10.0) {
        let geom = recover_metric(&model_three_form(theta).form).unwrap();
        let g = geom.metric.unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g.matrix()[(i, j)] - want).abs() < 1e-10);
            }
        }
    }
}
