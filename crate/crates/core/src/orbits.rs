//! Periodic-orbit enumeration, saddle classification, the hyperbolicity
//! filtration SFix_(f,alpha,c)(f^n), and the constant d(n).
//!
//! Three enumeration paths:
//! * toral-linear: exact integer arithmetic, solutions of (A^n - I) x = 0 on
//!   the torus via diagonalization of the integer matrix; the count equals
//!   |det(A^n - I)|;
//! * coded: one Newton refinement per admissible periodic word, seeded by the
//!   cylinder seed;
//! * Henon: sign-pattern relaxation over cyclic n-point sequences followed by
//!   a Newton polish, all 2^n patterns attempted.

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigenvalues, frame_min_expansion, gram_schmidt, Matrix, Point,
};
use crate::systems::{MapSystem, Symbol};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const DEDUP_TOL: f64 = 1e-8;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
const NEUTRAL_BAND: f64 = 1e-9;
const LATTICE_CAP: i128 = 5_000_000;

/// A periodic point with least period `period`; `base_point` is the
/// lexicographically smallest point of its orbit.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub base_point: Point,
    pub period: usize,
    /// x, f(x), ..., f^{period-1}(x) starting at the base point.
    pub points: Vec<Point>,
    /// df^period at the base point.
    pub monodromy: Matrix,
    /// max over k of |f(x_k) - x_{k+1}| with the cyclic closing step included;
    /// every point is independently Newton-polished so this stays near machine
    /// precision regardless of the period.
    pub residual: f64,
    /// Symbolic itinerary aligned with `points`, when enumerated via a coding.
    pub word: Option<Vec<Symbol>>,
}

/// Result of enumerating the fixed points of f^n: all orbits of least period
/// dividing n, plus a rejection log for non-convergent candidates.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub n: usize,
    pub orbits: Vec<PeriodicOrbit>,
    pub rejections: Vec<String>,
}

impl Enumeration {
    /// Number of fixed points of f^n (each orbit contributes `period` points).
    pub fn fixed_point_count(&self) -> usize {
        self.orbits.iter().map(|o| o.period).sum()
    }
}

pub fn enumerate_periodic_points(system: &MapSystem, n: usize) -> Result<Enumeration> {
    assert!(n >= 1);
    if let Some(a) = &system.linear_data {
        return enumerate_lattice(system, a, n);
    }
    if system.coding.is_some() {
        return enumerate_coded(system, n);
    }
    if system.is_henon() {
        return enumerate_henon(system, n);
    }
    Err(Error::Unsupported(format!(
        "no enumeration path for system `{}`",
        system.label
    )))
}

// ---------------------------------------------------------------------------
// exact lattice path for linear toral maps

fn enumerate_lattice(_system: &MapSystem, a: &[Vec<i64>], n: usize) -> Result<Enumeration> {
    let d = a.len();
    let an = int_pow(a, n);
    // M = A^n - I
    let mut m: Vec<Vec<i128>> = an.clone();
    for i in 0..d {
        m[i][i] -= 1;
    }
    let det: i128 = det_int(&m);
    if det == 0 {
        return Err(Error::Capacity(format!(
            "A^{n} - I is singular; eigenvalue 1 present"
        )));
    }
    let count = det.abs();
    if count > LATTICE_CAP {
        return Err(Error::Capacity(format!(
            "|det(A^n - I)| = {count} exceeds the lattice capacity {LATTICE_CAP}"
        )));
    }
    let (diag, c) = diagonalize_int(m);
    let q: i128 = diag.iter().fold(1i128, |acc, &v| lcm(acc, v));
    let scale: Vec<i128> = diag.iter().map(|&v| q / v).collect();

    // generate all solutions x = C y, y_i = k_i / diag_i, as numerators mod q
    let ai128: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut visited: HashSet<[i128; 3]> = HashSet::with_capacity(count as usize * 2);
    let mut orbits = Vec::new();
    let mut idx = vec![0i128; d];
    loop {
        let mut num = [0i128; 3];
        for j in 0..d {
            let mut s: i128 = 0;
            for i in 0..d {
                s += c[j][i] * idx[i] * scale[i];
            }
            num[j] = s.rem_euclid(q);
        }
        if !visited.contains(&num) {
            let orbit_nums = exact_orbit(&ai128, num, q, d);
            let p = orbit_nums.len();
            debug_assert!(n.is_multiple_of(p), "orbit length {p} must divide {n}");
            // canonical representative: lexicographically smallest numerators
            let start = (0..p)
                .min_by(|&i, &j| orbit_nums[i].cmp(&orbit_nums[j]))
                .unwrap();
            let points: Vec<Point> = (0..p)
                .map(|k| {
                    let nm = &orbit_nums[(start + k) % p];
                    Point::from_slice(
                        &(0..d).map(|j| nm[j] as f64 / q as f64).collect::<Vec<_>>(),
                    )
                })
                .collect();
            for nm in &orbit_nums {
                visited.insert(*nm);
            }
            let ap = int_pow(a, p);
            let monodromy = Matrix::from_rows_vec(
                &ap.iter()
                    .map(|r| r.iter().map(|&v| v as f64).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            );
            orbits.push(PeriodicOrbit {
                base_point: points[0],
                period: p,
                points,
                monodromy,
                residual: 0.0,
                word: None,
            });
        }
        // increment mixed-radix index over the diagonal
        let mut t = 0;
        loop {
            if t == d {
                // sanity: the count must match |det|
                let total: usize = orbits.iter().map(|o| o.period).sum();
                debug_assert_eq!(total as i128, count);
                sort_orbits(&mut orbits);
                return Ok(Enumeration { n, orbits, rejections: Vec::new() });
            }
            idx[t] += 1;
            if idx[t] < diag[t] {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

fn exact_orbit(a: &[Vec<i128>], start: [i128; 3], q: i128, d: usize) -> Vec<[i128; 3]> {
    let mut out = vec![start];
    let mut cur = start;
    loop {
        let mut next = [0i128; 3];
        for i in 0..d {
            let mut s = 0i128;
            for j in 0..d {
                s += a[i][j] * cur[j];
            }
            next[i] = s.rem_euclid(q);
        }
        if next == start {
            return out;
        }
        out.push(next);
        cur = next;
    }
}

fn int_pow(a: &[Vec<i64>], k: usize) -> Vec<Vec<i128>> {
    let d = a.len();
    let mut out: Vec<Vec<i128>> = (0..d)
        .map(|i| (0..d).map(|j| i128::from(i == j)).collect())
        .collect();
    for _ in 0..k {
        let mut next = vec![vec![0i128; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0i128;
                for l in 0..d {
                    s += a[i][l] as i128 * out[l][j];
                }
                next[i][j] = s;
            }
        }
        out = next;
    }
    out
}

fn det_int(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!(),
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}

/// Integer diagonalization R M C = diag(d) by row/column operations; returns
/// the positive diagonal and the accumulated column transform C. Solutions of
/// M x = 0 on the torus are then x = C y with y_i = k_i / d_i.
fn diagonalize_int(mut m: Vec<Vec<i128>>) -> (Vec<i128>, Vec<Vec<i128>>) {
    let d = m.len();
    let mut c: Vec<Vec<i128>> = (0..d)
        .map(|i| (0..d).map(|j| i128::from(i == j)).collect())
        .collect();
    for t in 0..d {
        loop {
            // pivot: entry of smallest nonzero magnitude in the trailing block
            let mut piv: Option<(usize, usize)> = None;
            for i in t..d {
                for j in t..d {
                    if m[i][j] != 0
                        && piv.is_none_or(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs())
                    {
                        piv = Some((i, j));
                    }
                }
            }
            let (pi, pj) = piv.expect("nonsingular matrix has a pivot");
            m.swap(t, pi);
            for row in m.iter_mut() {
                row.swap(t, pj);
            }
            for row in c.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in (t + 1)..d {
                if m[i][t] != 0 {
                    let qd = m[i][t].div_euclid(m[t][t]);
                    for j in t..d {
                        m[i][j] -= qd * m[t][j];
                    }
                    if m[i][t] != 0 {
                        clean = false;
                    }
                }
            }
            for j in (t + 1)..d {
                if m[t][j] != 0 {
                    let qd = m[t][j].div_euclid(m[t][t]);
                    for i in t..d {
                        m[i][j] -= qd * m[i][t];
                    }
                    for i in 0..d {
                        c[i][j] -= qd * c[i][t];
                    }
                    if m[t][j] != 0 {
                        clean = false;
                    }
                }
            }
            if clean && (t + 1..d).all(|i| m[i][t] == 0) && (t + 1..d).all(|j| m[t][j] == 0) {
                break;
            }
        }
    }
    let diag: Vec<i128> = (0..d).map(|i| m[i][i].abs()).collect();
    (diag, c)
}

// ---------------------------------------------------------------------------
// coded path: Newton refinement per admissible periodic word

fn enumerate_coded(system: &MapSystem, n: usize) -> Result<Enumeration> {
    let coding = system
        .coding
        .as_ref()
        .ok_or_else(|| Error::MissingCoding(system.label.clone()))?;
    let words = coding.admissible_words(n);
    let mut seen_words: HashSet<Vec<Symbol>> = HashSet::new();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut rejections = Vec::new();
    for w in words {
        if coding.transition[w[n - 1] as usize][w[0] as usize] == 0 {
            continue;
        }
        let p = least_word_period(&w);
        let canon = canonical_rotation(&w[..p]);
        if !seen_words.insert(canon.clone()) {
            continue;
        }
        let seed = coding.cylinder_seed(&canon);
        match newton_periodic(system, &seed, p) {
            Ok(x) => match build_orbit(system, &x, p, Some(canon.clone())) {
                Ok(orbit) => {
                    if !orbits
                        .iter()
                        .any(|o| o.period == orbit.period
                            && o.base_point.dist_inf(&orbit.base_point) < DEDUP_TOL)
                    {
                        orbits.push(orbit);
                    }
                }
                Err(e) => rejections.push(format!("word {canon:?}: {e}")),
            },
            Err(e) => rejections.push(format!("word {canon:?}: {e}")),
        }
    }
    sort_orbits(&mut orbits);
    Ok(Enumeration { n, orbits, rejections })
}

fn least_word_period(w: &[Symbol]) -> usize {
    let n = w.len();
    'outer: for p in 1..=n {
        if !n.is_multiple_of(p) {
            continue;
        }
        for i in p..n {
            if w[i] != w[i % p] {
                continue 'outer;
            }
        }
        return p;
    }
    n
}

fn canonical_rotation(w: &[Symbol]) -> Vec<Symbol> {
    let n = w.len();
    (0..n)
        .map(|r| {
            let mut rot = Vec::with_capacity(n);
            rot.extend_from_slice(&w[r..]);
            rot.extend_from_slice(&w[..r]);
            rot
        })
        .min()
        .unwrap()
}

/// Newton iteration on f^p(x) - x = 0. Convergence is judged on the Newton
/// step, not on |f^p(x) - x|: the latter carries rounding amplified by the
/// full-period expansion and cannot reach a fixed tolerance for long periods.
fn newton_periodic(system: &MapSystem, seed: &Point, p: usize) -> Result<Point> {
    let mut x = system.domain.normalize(seed);
    let mut last_step = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let fx = iterate(system, &x, p)?;
        let res = fx.sub(&x);
        let mono = monodromy_at(system, &x, p)?;
        let mut mmi = mono;
        for i in 0..system.dim {
            mmi.set(i, i, mmi.get(i, i) - 1.0);
        }
        let inv = mmi.inverse().ok_or_else(|| Error::AssertionFailed {
            name: "newton_jacobian".into(),
            detail: "df^p - I singular at iterate".into(),
        })?;
        let step = inv.matvec(&res);
        x = system.domain.normalize(&x.sub(&step));
        last_step = step.norm();
        if last_step < NEWTON_TOL {
            return Ok(x);
        }
    }
    Err(Error::AssertionFailed {
        name: "newton_convergence".into(),
        detail: format!("step size {last_step} after {NEWTON_MAX_ITER} iterations"),
    })
}

fn iterate(system: &MapSystem, x: &Point, p: usize) -> Result<Point> {
    let mut q = *x;
    for i in 0..p {
        q = system.forward(&q).map_err(|_| Error::Escape { index: i })?;
    }
    Ok(q)
}

fn monodromy_at(system: &MapSystem, x: &Point, p: usize) -> Result<Matrix> {
    let mut q = *x;
    let mut m = Matrix::identity(system.dim);
    for i in 0..p {
        m = system.jacobian(&q).map_err(|_| Error::Escape { index: i })?.mul(&m);
        if i + 1 < p {
            q = system.forward(&q).map_err(|_| Error::Escape { index: i })?;
        }
    }
    Ok(m)
}

/// Assemble a canonical PeriodicOrbit from a converged periodic point of f^p.
fn build_orbit(
    system: &MapSystem,
    x: &Point,
    p: usize,
    word: Option<Vec<Symbol>>,
) -> Result<PeriodicOrbit> {
    let mut seg = crate::systems::orbit_segment(system, x, p.saturating_sub(1))?;
    seg.truncate(p);
    // polish every orbit point independently: forward iterates inherit error
    // amplified by the full-period expansion, a fresh Newton solve per point
    // does not
    for q in seg.iter_mut().skip(1) {
        *q = newton_periodic(system, q, p)?;
    }
    // rotate so the base point is lexicographically smallest
    let start = (0..p).min_by(|&i, &j| {
        if seg[i].lex_le(&seg[j]) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater }
    }).unwrap();
    let points: Vec<Point> = (0..p).map(|k| seg[(start + k) % p]).collect();
    let word = word.map(|w| (0..p).map(|k| w[(start + k) % p]).collect());
    let monodromy = monodromy_at(system, &points[0], p)?;
    let mut residual = 0.0f64;
    for (k, pt) in points.iter().enumerate() {
        let fp = system.forward(pt).map_err(|_| Error::Escape { index: k })?;
        residual = residual.max(fp.dist_inf(&points[(k + 1) % p]));
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::AssertionFailed {
            name: "orbit_residual".into(),
            detail: format!("residual {residual} exceeds {RESIDUAL_TOL}"),
        });
    }
    Ok(PeriodicOrbit { base_point: points[0], period: p, points, monodromy, residual, word })
}

fn sort_orbits(orbits: &mut [PeriodicOrbit]) {
    orbits.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then_with(|| {
                a.base_point
                    .coords()
                    .partial_cmp(b.base_point.coords())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
}

// ---------------------------------------------------------------------------
// Henon path: sign-pattern relaxation over cyclic sequences

fn enumerate_henon(system: &MapSystem, n: usize) -> Result<Enumeration> {
    let (a, b) = match &system.spec {
        crate::systems::SystemSpec::Henon { a, b } => (*a, *b),
        _ => unreachable!("enumerate_henon on non-henon system"),
    };
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut rejections = Vec::new();
    for p in divisors(n) {
        for pattern in 0u64..(1u64 << p) {
            let signs: Vec<f64> = (0..p)
                .map(|i| if pattern >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            match relax_pattern(a, b, &signs) {
                Some(xs) => {
                    if least_sequence_period(&xs) != p {
                        continue; // found at its own least period already
                    }
                    let phase = Point::new2(xs[0], b * xs[p - 1]);
                    match build_orbit(system, &phase, p, None) {
                        Ok(orbit) => {
                            if orbit.period == p
                                && !orbits.iter().any(|o| {
                                    o.period == orbit.period
                                        && o.base_point.dist_inf(&orbit.base_point) < DEDUP_TOL
                                })
                            {
                                orbits.push(orbit);
                            }
                        }
                        Err(e) => rejections.push(format!("pattern {pattern:0width$b}: {e}", width = p)),
                    }
                }
                None => rejections.push(format!("pattern {pattern:0width$b}: no convergence", width = p)),
            }
        }
    }
    sort_orbits(&mut orbits);
    Ok(Enumeration { n, orbits, rejections })
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Relaxation flow dx_i/dt = s_i (x_{i+1} - 1 + a x_i^2 - b x_{i-1}) toward a
/// cyclic solution, then a Newton polish. Returns the x-coordinate sequence.
fn relax_pattern(a: f64, b: f64, signs: &[f64]) -> Option<Vec<f64>> {
    let p = signs.len();
    let mut xs = vec![0.0f64; p];
    let dt = 0.04;
    let mut g = vec![0.0f64; p];
    let mut converged = false;
    for _ in 0..40_000 {
        let mut gmax = 0.0f64;
        for i in 0..p {
            let ip = (i + 1) % p;
            let im = (i + p - 1) % p;
            g[i] = xs[ip] - 1.0 + a * xs[i] * xs[i] - b * xs[im];
            gmax = gmax.max(g[i].abs());
        }
        if gmax < 1e-8 {
            converged = true;
            break;
        }
        for i in 0..p {
            xs[i] += dt * signs[i] * g[i];
            if xs[i].abs() > 10.0 {
                return None;
            }
        }
    }
    if !converged {
        return None;
    }
    // Newton polish on the cyclic system
    for _ in 0..60 {
        let mut gmax = 0.0f64;
        let mut rhs = vec![0.0f64; p];
        for i in 0..p {
            let ip = (i + 1) % p;
            let im = (i + p - 1) % p;
            rhs[i] = -(xs[ip] - 1.0 + a * xs[i] * xs[i] - b * xs[im]);
            gmax = gmax.max(rhs[i].abs());
        }
        if gmax < 1e-14 {
            return Some(xs);
        }
        let mut jac = vec![vec![0.0f64; p]; p];
        for i in 0..p {
            jac[i][(i + 1) % p] += 1.0;
            jac[i][i] += 2.0 * a * xs[i];
            jac[i][(i + p - 1) % p] += -b;
        }
        let delta = linalg::solve_dense(&mut jac, &mut rhs)?;
        for i in 0..p {
            xs[i] += delta[i];
        }
    }
    // accept if the final residual is tiny even without early exit
    let resid = (0..p)
        .map(|i| {
            (xs[(i + 1) % p] - 1.0 + a * xs[i] * xs[i] - b * xs[(i + p - 1) % p]).abs()
        })
        .fold(0.0, f64::max);
    if resid < 1e-12 {
        Some(xs)
    } else {
        None
    }
}

fn least_sequence_period(xs: &[f64]) -> usize {
    let n = xs.len();
    'outer: for p in 1..=n {
        if !n.is_multiple_of(p) {
            continue;
        }
        for i in p..n {
            if (xs[i] - xs[i % p]).abs() > 1e-9 {
                continue 'outer;
            }
        }
        return p;
    }
    n
}

// ---------------------------------------------------------------------------
// saddle classification

/// Stable/unstable data of a periodic orbit: monodromy multipliers split by
/// modulus and the df-invariant splitting propagated along the orbit.
#[derive(Clone, Debug)]
pub struct SaddleData {
    pub orbit: PeriodicOrbit,
    pub unstable_multipliers: Vec<Complex64>,
    pub stable_multipliers: Vec<Complex64>,
    /// (E^u, E^s) orthonormal bases at each orbit point.
    pub splitting: Vec<(Vec<Point>, Vec<Point>)>,
    pub is_saddle: bool,
    /// True when a multiplier modulus sits inside the neutral band around 1.
    pub neutral: bool,
}

impl SaddleData {
    pub fn has_expansion(&self) -> bool {
        !self.unstable_multipliers.is_empty()
    }
}

pub fn classify_saddle(system: &MapSystem, orbit: &PeriodicOrbit) -> Result<SaddleData> {
    let eigs = eigenvalues(&orbit.monodromy);
    let neutral = eigs.iter().any(|z| (z.norm() - 1.0).abs() <= NEUTRAL_BAND);
    let unstable: Vec<Complex64> = eigs.iter().filter(|z| z.norm() > 1.0 + NEUTRAL_BAND).cloned().collect();
    let stable: Vec<Complex64> = eigs.iter().filter(|z| z.norm() < 1.0 - NEUTRAL_BAND).cloned().collect();
    let is_saddle = !neutral && !unstable.is_empty() && !stable.is_empty();
    let mut splitting = Vec::new();
    if is_saddle {
        let eu = subspace_for_group(&orbit.monodromy, &unstable, &stable)?;
        let es = subspace_for_group(&orbit.monodromy, &stable, &unstable)?;
        splitting.push((eu, es));
        for i in 1..orbit.period {
            let jac = system
                .jacobian(&orbit.points[i - 1])
                .map_err(|_| Error::Escape { index: i })?;
            let (prev_u, prev_s) = splitting.last().unwrap().clone();
            let (u, _) = gram_schmidt(&prev_u.iter().map(|v| jac.matvec(v)).collect::<Vec<_>>());
            let (s, _) = gram_schmidt(&prev_s.iter().map(|v| jac.matvec(v)).collect::<Vec<_>>());
            splitting.push((u, s));
        }
    }
    Ok(SaddleData {
        orbit: orbit.clone(),
        unstable_multipliers: unstable,
        stable_multipliers: stable,
        splitting,
        is_saddle,
        neutral,
    })
}

/// Orthonormal basis of the invariant subspace for a group of eigenvalues
/// (all on one side of the unit circle), `other` being the complement.
fn subspace_for_group(
    m: &Matrix,
    group: &[Complex64],
    other: &[Complex64],
) -> Result<Vec<Point>> {
    let real_vec = |lambda: f64| -> Option<Point> { real_eigenvector(m, lambda) };
    if group.len() == 1 {
        let v = real_vec(group[0].re).ok_or_else(|| Error::AssertionFailed {
            name: "eigenvector".into(),
            detail: "failed to resolve a simple real eigenvector".into(),
        })?;
        return Ok(vec![v]);
    }
    let all_real = group.iter().all(|z| z.im.abs() < 1e-9 * (1.0 + z.re.abs()));
    if all_real {
        let v0 = real_vec(group[0].re);
        let v1 = real_vec(group[1].re);
        if let (Some(v0), Some(v1)) = (v0, v1) {
            // orthonormalize; near-dependence falls through to the range trick
            let cross = v0.dot(&v1).abs();
            if cross < 1.0 - 1e-8 {
                let (q, _) = gram_schmidt(&[v0, v1]);
                return Ok(q);
            }
        }
    }
    // complex pair (or defective pair) in dimension 3: the invariant plane is
    // the range of (M - lambda I) over the complementary real eigenvalue
    if other.len() == 1 && m.dim == 3 {
        let lam = other[0].re;
        let mut shifted = *m;
        for i in 0..3 {
            shifted.set(i, i, shifted.get(i, i) - lam);
        }
        let cols: Vec<Point> = (0..3).map(|j| shifted.column(j)).collect();
        // pick the two most independent columns
        let mut best: Option<(Vec<Point>, f64)> = None;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let a = cols[i];
                let b = cols[j];
                let na = a.norm();
                let nb = b.norm();
                if na < 1e-12 || nb < 1e-12 {
                    continue;
                }
                let indep = 1.0 - (a.dot(&b) / (na * nb)).abs();
                if best.as_ref().is_none_or(|(_, s)| indep > *s) {
                    best = Some((vec![a, b], indep));
                }
            }
        }
        if let Some((pair, indep)) = best {
            if indep > 1e-10 {
                let (q, _) = gram_schmidt(&pair);
                return Ok(q);
            }
        }
    }
    Err(Error::AssertionFailed {
        name: "invariant_subspace".into(),
        detail: "could not resolve a 2-dimensional invariant subspace".into(),
    })
}

fn real_eigenvector(m: &Matrix, lambda: f64) -> Option<Point> {
    let d = m.dim;
    let mut shifted = *m;
    for i in 0..d {
        shifted.set(i, i, shifted.get(i, i) - lambda);
    }
    match d {
        2 => {
            let cands = [
                Point::new2(shifted.get(0, 1), -shifted.get(0, 0)),
                Point::new2(shifted.get(1, 1), -shifted.get(1, 0)),
            ];
            let v = if cands[0].norm() >= cands[1].norm() { cands[0] } else { cands[1] };
            if v.norm() < 1e-12 {
                None
            } else {
                Some(v.scale(1.0 / v.norm()))
            }
        }
        3 => {
            // cross products of row pairs span the null space complement
            let rows: Vec<Point> = (0..3)
                .map(|i| Point::from_slice(&[shifted.get(i, 0), shifted.get(i, 1), shifted.get(i, 2)]))
                .collect();
            let mut best: Option<Point> = None;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let c = cross3(&rows[i], &rows[j]);
                    if best.as_ref().is_none_or(|b| c.norm() > b.norm()) {
                        best = Some(c);
                    }
                }
            }
            let v = best?;
            if v.norm() < 1e-12 {
                None
            } else {
                Some(v.scale(1.0 / v.norm()))
            }
        }
        _ => None,
    }
}

fn cross3(a: &Point, b: &Point) -> Point {
    Point::from_slice(&[
        a.get(1) * b.get(2) - a.get(2) * b.get(1),
        a.get(2) * b.get(0) - a.get(0) * b.get(2),
        a.get(0) * b.get(1) - a.get(1) * b.get(0),
    ])
}

// ---------------------------------------------------------------------------
// hyperbolicity filtration

/// Strength-of-hyperbolicity parameters (alpha in nats per iterate).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiltrationParams {
    pub alpha: f64,
    pub c: f64,
    /// Finite horizon for the for-all-k test; 0 means the default 4 * period.
    pub k_max: usize,
}

impl FiltrationParams {
    pub fn new(alpha: f64, c: f64) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        assert!(c > 0.0 && c <= 1.0, "c must lie in (0, 1]");
        FiltrationParams { alpha, c, k_max: 0 }
    }
}

/// Outcome of a membership test, recording which branch decided the tail.
#[derive(Clone, Copy, Debug)]
pub struct Membership {
    pub accepted: bool,
    /// True when the multiplier tail certificate covered k beyond the horizon;
    /// false when the finite window or the multiplier rate already decided.
    pub tail_certified: bool,
    pub finite_k_checked: usize,
}

/// Membership of a saddle orbit in SFix_(f,alpha,c)(f^n).
pub fn filtration_membership(
    system: &MapSystem,
    saddle: &SaddleData,
    params: &FiltrationParams,
) -> Result<bool> {
    Ok(filtration_membership_power(system, saddle, 1, params.alpha, params.c, params.k_max)?
        .accepted)
}

/// Membership with respect to the iterate g = f^tau: checks
/// ||dg^k w|| >= c e^{k alpha} ||w|| on E^u and the mirrored bound on E^s for
/// all k, via a finite horizon plus a multiplier tail certificate.
pub fn filtration_membership_power(
    system: &MapSystem,
    saddle: &SaddleData,
    tau: usize,
    alpha: f64,
    c: f64,
    k_max: usize,
) -> Result<Membership> {
    assert!(tau >= 1 && alpha > 0.0 && c > 0.0);
    if !saddle.is_saddle {
        return Ok(Membership { accepted: false, tail_certified: false, finite_k_checked: 0 });
    }
    let d = saddle.orbit.period;
    let g_period = d / gcd_usize(d, tau);
    let k_max = if k_max == 0 { 4 * g_period } else { k_max };

    let jacs = orbit_jacobians(system, &saddle.orbit)?;
    let jinvs: Vec<Matrix> = jacs
        .iter()
        .map(|j| {
            j.inverse().ok_or_else(|| Error::AssertionFailed {
                name: "jacobian_inverse".into(),
                detail: "singular Jacobian along orbit".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    for ell in 0..d {
        let (eu, es) = &saddle.splitting[ell];
        // unstable: forward propagation
        let mut images: Vec<Point> = eu.clone();
        for k in 1..=k_max {
            for step in 0..tau {
                let j = &jacs[(ell + (k - 1) * tau + step) % d];
                for v in images.iter_mut() {
                    *v = j.matvec(v);
                }
            }
            let min_exp = frame_min_expansion(&images);
            if min_exp < c * ((k as f64) * alpha).exp() * (1.0 - 1e-12) {
                return Ok(Membership { accepted: false, tail_certified: false, finite_k_checked: k });
            }
        }
        // stable: backward propagation under df^{-1}
        let mut images: Vec<Point> = es.clone();
        for k in 1..=k_max {
            for step in 0..tau {
                let idx = (ell + 2 * d * k_max * tau - ((k - 1) * tau + step) - 1) % d;
                let j = &jinvs[idx];
                for v in images.iter_mut() {
                    *v = j.matvec(v);
                }
            }
            let min_exp = frame_min_expansion(&images);
            if min_exp < c * ((k as f64) * alpha).exp() * (1.0 - 1e-12) {
                return Ok(Membership { accepted: false, tail_certified: false, finite_k_checked: k });
            }
        }
    }

    // tail: over one g-period the splitting contracts/expands by exactly the
    // monodromy multiplier moduli (power lcm(d,tau)/d of the f-monodromy)
    let e_pow = (tau * g_period / d) as f64;
    let rate_u = saddle
        .unstable_multipliers
        .iter()
        .map(|z| z.norm().powf(e_pow))
        .fold(f64::INFINITY, f64::min);
    let rate_s = saddle
        .stable_multipliers
        .iter()
        .map(|z| z.norm().powf(-e_pow))
        .fold(f64::INFINITY, f64::min);
    let threshold = (g_period as f64 * alpha).exp();
    let rate = rate_u.min(rate_s);
    if rate >= threshold * (1.0 - 1e-12) {
        Ok(Membership { accepted: true, tail_certified: true, finite_k_checked: k_max })
    } else {
        // the per-period growth rate falls short of e^{p alpha}: the bound
        // fails for all large enough k
        Ok(Membership { accepted: false, tail_certified: false, finite_k_checked: k_max })
    }
}

fn gcd_usize(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd_usize(b, a % b) }
}

pub fn orbit_jacobians(system: &MapSystem, orbit: &PeriodicOrbit) -> Result<Vec<Matrix>> {
    orbit
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| system.jacobian(p).map_err(|_| Error::Escape { index: i }))
        .collect()
}

// ---------------------------------------------------------------------------
// the constant d(n)

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// The formula as displayed: min of the two operator norms.
    Operator,
    /// Alternate reading: min of the two smallest singular values.
    MinSingular,
}

/// d(n) = min_{1<=l<=n-1} ( e^{l alpha} min_y min{ ||(df_y^l)^{-1}||, ||df_y^l|| } ),
/// with the min over y approximated over `samples` quasi-random domain points
/// (a single point suffices for linear systems). Empty-range convention
/// d(1) = 1.
pub fn d_constant(
    system: &MapSystem,
    n: usize,
    alpha: f64,
    samples: usize,
    mode: NormMode,
) -> Result<f64> {
    assert!(n >= 1 && samples >= 1);
    if n == 1 {
        return Ok(1.0);
    }
    let pts = if system.is_linear() {
        vec![Point::zero(system.dim)]
    } else {
        sample_invariant_points(system, samples, 0x5eed)?
    };
    let mut best = f64::INFINITY;
    for ell in 1..n {
        let mut inner = f64::INFINITY;
        for y in &pts {
            let acc = match crate::cocycle::cocycle_product(system, y, ell) {
                Ok(acc) => acc,
                Err(Error::Escape { .. }) => continue,
                Err(e) => return Err(e),
            };
            let log_sv = acc.log_singular_values();
            let (fwd, inv) = match mode {
                // ||df^l|| = sigma_1, ||(df^l)^{-1}|| = 1/sigma_min
                NormMode::Operator => (log_sv[0], -log_sv[log_sv.len() - 1]),
                NormMode::MinSingular => (log_sv[log_sv.len() - 1], -log_sv[0]),
            };
            inner = inner.min(fwd.exp().min(inv.exp()));
        }
        if inner.is_finite() {
            best = best.min((ell as f64 * alpha).exp() * inner);
        }
    }
    if !best.is_finite() {
        return Err(Error::AssertionFailed {
            name: "d_constant_samples".into(),
            detail: "no sample point survived the cocycle length".into(),
        });
    }
    Ok(best)
}

/// Quasi-random points on (a numerical stand-in for) the invariant set:
/// Kronecker sequence on tori, random admissible cylinder seeds for coded
/// systems, attractor samples for Henon.
pub fn sample_invariant_points(system: &MapSystem, count: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match (&system.coding, system.is_henon()) {
        (_, false) if system.is_linear() => {
            let mut out = Vec::with_capacity(count);
            for k in 0..count {
                let mut p = Point::zero(system.dim);
                let alphas = [0.618_033_988_749_895, 0.754_877_666_246_693, 0.569_840_290_998_053];
                for i in 0..system.dim {
                    p.set(i, (0.5 + (k as f64 + 1.0) * alphas[i]).fract());
                }
                out.push(p);
            }
            Ok(out)
        }
        (Some(coding), _) => {
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let len = 14;
                let mut word: Vec<Symbol> = Vec::with_capacity(len);
                let mut sym = rng.gen_range(0..coding.alphabet) as Symbol;
                word.push(sym);
                for _ in 1..len {
                    let choices: Vec<Symbol> = (0..coding.alphabet as Symbol)
                        .filter(|&t| coding.transition[sym as usize][t as usize] == 1)
                        .collect();
                    sym = choices[rng.gen_range(0..choices.len())];
                    word.push(sym);
                }
                out.push(coding.cylinder_seed(&word));
            }
            Ok(out)
        }
        (None, true) => {
            let mut p = Point::new2(0.0, 0.0);
            for i in 0..1000 {
                p = system.forward(&p).map_err(|_| Error::Escape { index: i })?;
            }
            let mut out = Vec::with_capacity(count);
            for i in 0..count {
                out.push(p);
                p = system.forward(&p).map_err(|_| Error::Escape { index: i })?;
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!(
            "no invariant-set sampler for `{}`",
            system.label
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_system, SystemSpec};

    const LAMBDA_CAT: f64 = 2.618033988749895;

    fn cat() -> MapSystem {
        make_system(&SystemSpec::Cat).unwrap()
    }

    fn horseshoe() -> MapSystem {
        make_system(&SystemSpec::Horseshoe { s: 2, beta: 4.0, gamma: 0.25 }).unwrap()
    }

    #[test]
    fn cat_fixed_points_n1() {
        let e = enumerate_periodic_points(&cat(), 1).unwrap();
        assert_eq!(e.fixed_point_count(), 1); // |det(A - I)| = 1
        assert_eq!(e.orbits.len(), 1);
        assert!(e.orbits[0].base_point.dist_inf(&Point::new2(0.0, 0.0)) < 1e-15);
    }

    #[test]
    fn cat_fixed_points_n2() {
        let e = enumerate_periodic_points(&cat(), 2).unwrap();
        // |det(A^2 - I)| = 5: the fixed point plus two period-2 orbits
        assert_eq!(e.fixed_point_count(), 5);
        let per2: Vec<_> = e.orbits.iter().filter(|o| o.period == 2).collect();
        assert_eq!(per2.len(), 2);
    }

    #[test]
    fn cat_count_identity_up_to_10() {
        let sys = cat();
        for n in 1..=10usize {
            let e = enumerate_periodic_points(&sys, n).unwrap();
            let lam = LAMBDA_CAT;
            let expected = (lam.powi(n as i32) + lam.powi(-(n as i32)) - 2.0).round() as usize;
            assert_eq!(e.fixed_point_count(), expected, "n = {n}");
        }
    }

    #[test]
    fn cat_orbit_reproduced_by_iteration() {
        let sys = cat();
        let e = enumerate_periodic_points(&sys, 3).unwrap();
        for o in &e.orbits {
            let seg = crate::systems::orbit_segment(&sys, &o.base_point, o.period).unwrap();
            assert!(seg[o.period].dist_inf(&o.base_point) < 1e-10);
            for (k, p) in o.points.iter().enumerate() {
                assert!(seg[k].dist_inf(p) < 1e-10);
            }
            // base point is the lexicographically smallest point of the orbit
            for p in &o.points {
                assert!(o.base_point.lex_le(p));
            }
        }
    }

    #[test]
    fn horseshoe_full_shift_counts() {
        let e = enumerate_periodic_points(&horseshoe(), 3).unwrap();
        assert_eq!(e.fixed_point_count(), 8); // 2^3 words
        assert!(e.rejections.is_empty());
        for o in &e.orbits {
            assert!(o.residual <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn classify_cat_fixed_point() {
        let sys = cat();
        let e = enumerate_periodic_points(&sys, 1).unwrap();
        let s = classify_saddle(&sys, &e.orbits[0]).unwrap();
        assert!(s.is_saddle);
        assert_eq!(s.unstable_multipliers.len(), 1);
        assert!((s.unstable_multipliers[0].norm() - LAMBDA_CAT).abs() < 1e-12);
        assert!((s.stable_multipliers[0].norm() - 1.0 / LAMBDA_CAT).abs() < 1e-12);
    }

    #[test]
    fn neutral_multiplier_is_not_saddle() {
        // rotation-like monodromy: unit-modulus pair
        let sys = cat();
        let orbit = PeriodicOrbit {
            base_point: Point::new2(0.0, 0.0),
            period: 1,
            points: vec![Point::new2(0.0, 0.0)],
            monodromy: Matrix::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]),
            residual: 0.0,
            word: None,
        };
        let s = classify_saddle(&sys, &orbit).unwrap();
        assert!(!s.is_saddle);
        assert!(s.neutral);
    }

    #[test]
    fn horseshoe_orbit_multipliers() {
        let sys = horseshoe();
        let e = enumerate_periodic_points(&sys, 3).unwrap();
        for o in &e.orbits {
            let s = classify_saddle(&sys, o).unwrap();
            assert!(s.is_saddle);
            let n = o.period as i32;
            assert!((s.unstable_multipliers[0].norm() - 4.0f64.powi(n)).abs() < 1e-9 * 4.0f64.powi(n));
            assert!((s.stable_multipliers[0].norm() - 0.25f64.powi(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn splitting_is_df_invariant() {
        let sys = horseshoe();
        let e = enumerate_periodic_points(&sys, 4).unwrap();
        for o in e.orbits.iter().filter(|o| o.period == 4) {
            let s = classify_saddle(&sys, o).unwrap();
            let jacs = orbit_jacobians(&sys, o).unwrap();
            for i in 0..o.period {
                let (u, _) = &s.splitting[i];
                let (un, _) = &s.splitting[(i + 1) % o.period];
                let img = jacs[i].matvec(&u[0]);
                let img = img.scale(1.0 / img.norm());
                // principal angle between df E^u_i and E^u_{i+1}
                let cosang = img.dot(&un[0]).abs();
                assert!(cosang > 1.0 - 1e-8, "angle defect {}", 1.0 - cosang);
            }
        }
    }

    #[test]
    fn filtration_cat_alpha_half_passes() {
        // oracle: A symmetric so ||A^k w|| = lambda^k ||w|| exactly on E^u;
        // direct matrix-power check to k = 40 agrees
        let sys = cat();
        let e = enumerate_periodic_points(&sys, 1).unwrap();
        let s = classify_saddle(&sys, &e.orbits[0]).unwrap();
        let p = FiltrationParams { alpha: 0.5, c: 1.0, k_max: 40 };
        assert!(filtration_membership(&sys, &s, &p).unwrap());
    }

    #[test]
    fn filtration_cat_alpha_one_fails() {
        let sys = cat();
        let e = enumerate_periodic_points(&sys, 1).unwrap();
        let s = classify_saddle(&sys, &e.orbits[0]).unwrap();
        let p = FiltrationParams::new(1.0, 1.0);
        assert!(!filtration_membership(&sys, &s, &p).unwrap());
    }

    #[test]
    fn filtration_small_alpha_exhausts() {
        for sys in [cat(), horseshoe()] {
            let e = enumerate_periodic_points(&sys, 4).unwrap();
            for o in &e.orbits {
                let s = classify_saddle(&sys, o).unwrap();
                assert!(s.is_saddle);
                let p = FiltrationParams { alpha: 0.01, c: 1e-6, k_max: 0 };
                assert!(filtration_membership(&sys, &s, &p).unwrap(), "{}", sys.label);
            }
        }
    }

    #[test]
    fn d_constant_conventions() {
        let sys = cat();
        assert_eq!(d_constant(&sys, 1, 0.7, 1, NormMode::Operator).unwrap(), 1.0);
        // d(2) = e^{0.5} * min{||A||, ||A^{-1}||} = e^{0.5} * lambda
        let d2 = d_constant(&sys, 2, 0.5, 1, NormMode::Operator).unwrap();
        assert!((d2 - 0.5f64.exp() * LAMBDA_CAT).abs() < 1e-10, "{d2}");
    }

    #[test]
    fn d_constant_nonsymmetric_toral() {
        // oracle: sigma_1(B) = 2 + sqrt 5 for B = [[2,1],[3,2]], and
        // ||B^{-1}|| = sigma_1(B) as well since |det B| = 1
        let sys = make_system(&SystemSpec::Toral { matrix: vec![vec![2, 1], vec![3, 2]] }).unwrap();
        let d2 = d_constant(&sys, 2, 0.5, 1, NormMode::Operator).unwrap();
        let sigma1 = 2.0 + 5.0f64.sqrt();
        assert!((d2 - 0.5f64.exp() * sigma1).abs() < 1e-9, "{d2}");
    }

    #[test]
    fn henon_fixed_points() {
        let sys = make_system(&SystemSpec::Henon { a: 1.4, b: 0.3 }).unwrap();
        let e = enumerate_periodic_points(&sys, 1).unwrap();
        // two real fixed points: x = (-(1-b) +- sqrt((1-b)^2 + 4a)) / (2a)
        assert_eq!(e.fixed_point_count(), 2);
        let a = 1.4f64;
        let b = 0.3f64;
        let disc = ((1.0 - b) * (1.0 - b) + 4.0 * a).sqrt();
        let mut expected = [(-(1.0 - b) + disc) / (2.0 * a), (-(1.0 - b) - disc) / (2.0 * a)];
        expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut got: Vec<f64> = e.orbits.iter().map(|o| o.base_point.get(0)).collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, w) in got.iter().zip(&expected) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
    }

    #[test]
    fn henon_orbits_residual_and_iteration() {
        let sys = make_system(&SystemSpec::Henon { a: 1.4, b: 0.3 }).unwrap();
        let e = enumerate_periodic_points(&sys, 6).unwrap();
        assert!(e.fixed_point_count() >= 2);
        for o in &e.orbits {
            assert!(o.residual <= RESIDUAL_TOL);
            let seg = crate::systems::orbit_segment(&sys, &o.base_point, o.period).unwrap();
            assert!(seg[o.period].dist_inf(&o.base_point) < 1e-8);
        }
    }

    #[test]
    fn lattice_capacity_error() {
        let sys = cat();
        let err = enumerate_periodic_points(&sys, 40).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }
}
