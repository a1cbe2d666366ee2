//! Oracles shared by the integration targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use qcs::quant::{box_region, BoxRegion, ScalarQuantizer};
use qcs::recon::{constrained_projection, CprojParams, Phase};
use qcs::rng::{keyed_rng, Gaussian};

/// Heavy-tailed test data: a standard normal times a clipped half-normal.
pub fn samples(seed: u64, n: usize) -> Vec<f64> {
    let mut g = Gaussian::new(keyed_rng(seed, qcs::rng::domain::GAUSSIAN_SAMPLES, 0));
    (0..n).map(|_| g.sample() * g.sample().abs().max(0.2)).collect()
}

/// δ_K by enumerating every K-subset as a bitmask and taking singular values of Φ_T.
pub fn brute_force_delta(phi: &DMatrix<f64>, k: usize) -> f64 {
    let n = phi.ncols();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let sv = phi.select_columns(&cols).svd(false, false).singular_values;
        best = best.max(1.0 - sv.min().powi(2)).max(sv.max().powi(2) - 1.0);
    }
    best
}

/// Smallest expected length over every length assignment in `1..M` that
/// satisfies the Kraft inequality, `M ≥ 2`.
pub fn exhaustive_expected_length(p: &[f64]) -> f64 {
    let m = p.len();
    let mut lengths = vec![1u32; m];
    let mut best = f64::INFINITY;
    loop {
        let kraft: f64 = lengths.iter().map(|&l| (-(l as f64)).exp2()).sum();
        if kraft <= 1.0 + 1e-12 {
            best = best.min(lengths.iter().zip(p).map(|(&l, &q)| l as f64 * q).sum());
        }
        let mut i = 0;
        loop {
            if i == m {
                return best;
            }
            lengths[i] += 1;
            if lengths[i] < m as u32 {
                break;
            }
            lengths[i] = 1;
            i += 1;
        }
    }
}

/// `min_x dist(Φx, box)` by a shrinking grid over the coefficients.
pub fn grid_distance(a: &DMatrix<f64>, region: &BoxRegion) -> (f64, DVector<f64>) {
    let t = a.ncols();
    let dist = |x: &DVector<f64>| region.distance(&(a * x));
    let points = 41;
    let mut center = a.clone().svd(true, true).solve(&region.clip(&DVector::zeros(a.nrows())), 1e-12).unwrap();
    let mut half = 20.0 * (1.0 + center.amax());
    let mut best = dist(&center);
    for _ in 0..40 {
        let h = 2.0 * half / (points - 1) as f64;
        let mut next = center.clone();
        let offsets: Vec<f64> = (0..points).map(|i| -half + h * i as f64).collect();
        let mut visit = |x: DVector<f64>| {
            let d = dist(&x);
            if d < best {
                best = d;
                next = x;
            }
        };
        if t == 1 {
            for &o in &offsets {
                visit(DVector::from_vec(vec![center[0] + o]));
            }
        } else {
            for &o0 in &offsets {
                for &o1 in &offsets {
                    visit(DVector::from_vec(vec![center[0] + o0, center[1] + o1]));
                }
            }
        }
        center = next;
        half = 4.0 * h;
    }
    (best, region.clip(&(a * &center)))
}

/// Nearest point of `box ∩ span(A)` to `y_hat`, by solving the equality
/// constrained least-squares problem for every choice of active faces and
/// keeping the best feasible candidate.
pub fn nearest_by_faces(a: &DMatrix<f64>, region: &BoxRegion, y_hat: &DVector<f64>) -> Option<DVector<f64>> {
    let m = a.nrows();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(m as u32) {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut c = code;
        let mut skip = false;
        for i in 0..m {
            let b = match c % 3 {
                0 => None,
                1 => Some(region.lower()[i]),
                _ => Some(region.upper()[i]),
            };
            c /= 3;
            if let Some(b) = b {
                if !b.is_finite() {
                    skip = true;
                }
                rows.push(i);
                rhs.push(b);
            }
        }
        if skip {
            continue;
        }
        let x = if rows.is_empty() {
            a.clone().svd(true, true).solve(y_hat, 1e-12).unwrap()
        } else {
            let s = a.select_rows(&rows);
            let b = DVector::from_vec(rhs);
            let svd = s.clone().svd(true, true);
            let xp = svd.solve(&b, 1e-12).unwrap();
            if (&s * &xp - &b).norm() > 1e-10 {
                continue;
            }
            let rank = svd.rank(1e-12);
            // zero rows make the right singular basis complete
            let padded = s.clone().resize_vertically(s.nrows().max(a.ncols()), 0.0);
            let vt = padded.svd(false, true).v_t.unwrap();
            if rank == a.ncols() {
                xp
            } else {
                let null = vt.rows(rank, a.ncols() - rank).transpose();
                let an = a * &null;
                let z = an.svd(true, true).solve(&(y_hat - a * &xp), 1e-12).unwrap();
                xp + null * z
            }
        };
        let y = a * &x;
        if !region.contains(&y, 1e-12) {
            continue;
        }
        let obj = (&y - y_hat).norm();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, y));
        }
    }
    best.map(|(_, y)| y)
}

/// Checks constrained projection on `count` random instances with `m ≤ 3`,
/// `|T| ≤ 2`. Returns the numbers of disjoint and intersecting instances.
pub fn check_cproj_instances(seed: u64, count: u64) -> Result<(usize, usize), String> {
    let q = ScalarQuantizer::uniform(8, 0.5).unwrap();
    let (mut disjoint, mut intersecting) = (0, 0);
    for instance in 0..count {
        let mut rng = keyed_rng(seed, 100, instance);
        let m = rng.random_range(1..=3usize);
        let t = rng.random_range(1..=m.min(2));
        let mut g = Gaussian::new(rng);
        let a = DMatrix::from_fn(m, t, |_, _| g.sample());
        // near the span half of the time, so both phases occur
        let x0 = DVector::from_fn(t, |_, _| g.sample());
        let noise = if instance % 2 == 0 { 0.05 } else { 1.0 };
        let y = &a * x0 + DVector::from_fn(m, |_, _| noise * g.sample());
        let qv = q.quantize(&y);
        let region = box_region(&q, &qv.indices).unwrap();
        let y_hat = qv.values;

        let got = constrained_projection(&a, &region, &y_hat, &CprojParams::default()).map_err(|e| e.to_string())?;
        let (grid_dist, grid_y) = grid_distance(&a, &region);
        let fail = |what: String| Err(format!("instance {instance} (m={m}, |T|={t}): {what}"));
        match nearest_by_faces(&a, &region, &y_hat) {
            Some(oracle_y) => {
                intersecting += 1;
                if grid_dist >= 1e-6 || got.phase != Phase::Intersecting || got.dist >= 1e-6 {
                    return fail(format!("expected an intersection, got {:?} at {} (grid {grid_dist})", got.phase, got.dist));
                }
                let dy = (&got.y - &oracle_y).amax();
                if dy >= 1e-4 {
                    return fail(format!("nearest point off by {dy}"));
                }
            }
            None => {
                disjoint += 1;
                if got.phase != Phase::Disjoint || (got.dist - grid_dist).abs() >= 1e-6 {
                    return fail(format!("{:?} at distance {} against grid {grid_dist}", got.phase, got.dist));
                }
                let dy = (&got.y - &grid_y).amax();
                if dy >= 1e-4 {
                    return fail(format!("box point off by {dy}"));
                }
            }
        }
        if !region.contains(&got.y, 1e-9) || ((&a * &got.x - &got.y).norm() - got.dist).abs() >= 1e-9 {
            return fail("returned pair is inconsistent".into());
        }
    }
    Ok((disjoint, intersecting))
}
