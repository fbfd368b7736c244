//! Registry and evaluation layer for the concrete dynamical systems.
//!
//! Built-in families: linear toral automorphisms (exact integer path),
//! piecewise-linear full-branch horseshoes on the unit square, the Henon
//! family on a trapping box, subshift restrictions, and k-th power systems.

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, Matrix, Point};
use serde::{Deserialize, Serialize};

/// Symbol of a Markov coding. Alphabets stay small (edge shifts of integer
/// matrices, block codings of powers), u16 is plenty.
pub type Symbol = u16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Torus { dim: usize },
    Rectangle { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Torus { dim } => *dim,
            Domain::Rectangle { lo, .. } => lo.len(),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Domain::Torus { .. } => true,
            Domain::Rectangle { lo, hi } => (0..lo.len())
                .all(|i| p.get(i) >= lo[i] && p.get(i) <= hi[i]),
        }
    }

    /// Torus points reduced into [0,1)^d; rectangles left alone.
    pub fn normalize(&self, p: &Point) -> Point {
        match self {
            Domain::Torus { dim } => {
                let mut q = *p;
                for i in 0..*dim {
                    let v = p.get(i) - p.get(i).floor();
                    q.set(i, if v >= 1.0 { 0.0 } else { v });
                }
                q
            }
            Domain::Rectangle { .. } => *p,
        }
    }
}

/// Declarative system description; what the CLI config carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Cat,
    Toral { matrix: Vec<Vec<i64>> },
    Horseshoe { s: usize, beta: f64, gamma: f64 },
    /// Subshift of finite type realized on horseshoe geometry with `s = alphabet`
    /// branches; the coding carries the given 0/1 transition matrix.
    Sft { transition: Vec<Vec<u8>> },
    Henon { a: f64, b: f64 },
    Power { base: Box<SystemSpec>, k: usize },
}

impl SystemSpec {
    pub fn cat_matrix() -> Vec<Vec<i64>> {
        vec![vec![2, 1], vec![1, 1]]
    }
}

#[derive(Clone, Debug)]
enum Dynamics {
    ToralLinear {
        a: Matrix,
    },
    Horseshoe {
        s: usize,
        beta: f64,
        gamma: f64,
    },
    Henon {
        a: f64,
        b: f64,
    },
}

/// Seed assignment for cylinders of a coding.
#[derive(Clone, Debug)]
enum SeedRule {
    /// Periodic point of the word repeated; exact for piecewise-affine branches.
    HorseshoePeriodic { s: usize, beta: f64, gamma: f64 },
    /// Linear systems: every potential in play is constant in space, the seed
    /// is a nominal anchor.
    Anchor { point: Point },
    /// Block coding of a power system: expand block symbols into base words.
    Blocks {
        base: Box<MarkovCoding>,
        block_words: Vec<Vec<Symbol>>,
    },
    /// Subshift restriction: relabel into the parent alphabet.
    Relabel {
        base: Box<MarkovCoding>,
        symbols: Vec<Symbol>,
    },
}

#[derive(Clone, Debug)]
pub struct MarkovCoding {
    pub alphabet: usize,
    /// 0/1 transition matrix, `transition[i][j] == 1` iff symbol j may follow i.
    pub transition: Vec<Vec<u8>>,
    pub depth_limit: usize,
    seeds: SeedRule,
}

impl MarkovCoding {
    fn new(transition: Vec<Vec<u8>>, depth_limit: usize, seeds: SeedRule) -> Result<Self> {
        let alphabet = transition.len();
        if alphabet == 0 {
            return Err(Error::InvalidSpec("empty coding alphabet".into()));
        }
        for row in &transition {
            if row.len() != alphabet || row.iter().any(|&v| v > 1) {
                return Err(Error::InvalidSpec(
                    "transition matrix must be square 0/1".into(),
                ));
            }
        }
        let coding = MarkovCoding { alphabet, transition, depth_limit, seeds };
        if !coding.is_irreducible() {
            return Err(Error::InvalidSpec(
                "coding transition matrix is reducible".into(),
            ));
        }
        Ok(coding)
    }

    /// Reachability closure: every symbol reaches every other.
    pub fn is_irreducible(&self) -> bool {
        let n = self.alphabet;
        let mut reach = self.transition.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] == 1 && reach[k][j] == 1 {
                        reach[i][j] = 1;
                    }
                }
            }
        }
        (0..n).all(|i| (0..n).all(|j| reach[i][j] == 1))
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.windows(2)
            .all(|w| self.transition[w[0] as usize][w[1] as usize] == 1)
    }

    pub fn is_cyclically_admissible(&self, word: &[Symbol]) -> bool {
        if word.is_empty() {
            return false;
        }
        self.is_admissible(word)
            && self.transition[word[word.len() - 1] as usize][word[0] as usize] == 1
    }

    /// All admissible words of the given length, lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Vec<Symbol>> {
        assert!(len >= 1);
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(len);
        self.extend_words(&mut word, len, &mut out);
        out
    }

    fn extend_words(&self, word: &mut Vec<Symbol>, len: usize, out: &mut Vec<Vec<Symbol>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for s in 0..self.alphabet as Symbol {
            if let Some(&last) = word.last() {
                if self.transition[last as usize][s as usize] == 0 {
                    continue;
                }
            }
            word.push(s);
            self.extend_words(word, len, out);
            word.pop();
        }
    }

    /// An interior point of the region coded by the word's first symbol, used
    /// as Newton seed for the periodic word repeated.
    pub fn cylinder_seed(&self, word: &[Symbol]) -> Point {
        assert!(!word.is_empty());
        match &self.seeds {
            SeedRule::HorseshoePeriodic { s, beta, gamma } => {
                horseshoe_periodic_point(word, *s, *beta, *gamma)
            }
            SeedRule::Anchor { point } => *point,
            SeedRule::Blocks { base, block_words } => {
                let mut expanded = Vec::new();
                for &b in word {
                    expanded.extend_from_slice(&block_words[b as usize]);
                }
                base.cylinder_seed(&expanded)
            }
            SeedRule::Relabel { base, symbols } => {
                let relabeled: Vec<Symbol> = word.iter().map(|&w| symbols[w as usize]).collect();
                base.cylinder_seed(&relabeled)
            }
        }
    }

    /// Block coding of the k-th power map: symbols are admissible k-words.
    pub fn power(&self, k: usize) -> Result<MarkovCoding> {
        assert!(k >= 1);
        if k == 1 {
            return Ok(self.clone());
        }
        let blocks = self.admissible_words(k);
        if blocks.len() > Symbol::MAX as usize {
            return Err(Error::Capacity(format!(
                "block alphabet of size {} exceeds symbol capacity",
                blocks.len()
            )));
        }
        let m = blocks.len();
        let mut transition = vec![vec![0u8; m]; m];
        for (i, u) in blocks.iter().enumerate() {
            for (j, v) in blocks.iter().enumerate() {
                if self.transition[u[k - 1] as usize][v[0] as usize] == 1 {
                    transition[i][j] = 1;
                }
            }
        }
        MarkovCoding::new(
            transition,
            (self.depth_limit / k).max(1),
            SeedRule::Blocks { base: Box::new(self.clone()), block_words: blocks },
        )
    }

    fn restrict(&self, symbols: &[Symbol], transition: Vec<Vec<u8>>) -> Result<MarkovCoding> {
        let m = symbols.len();
        if transition.len() != m {
            return Err(Error::InvalidSpec(
                "subshift transition size must match symbol subset".into(),
            ));
        }
        for (i, row) in transition.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v == 1
                    && self.transition[symbols[i] as usize][symbols[j] as usize] == 0
                {
                    return Err(Error::InvalidSpec(format!(
                        "subshift transition {}->{} is not admissible in the parent coding",
                        symbols[i], symbols[j]
                    )));
                }
            }
        }
        MarkovCoding::new(
            transition,
            self.depth_limit,
            SeedRule::Relabel { base: Box::new(self.clone()), symbols: symbols.to_vec() },
        )
    }
}

/// Exact periodic point of the horseshoe with itinerary `word` repeated.
fn horseshoe_periodic_point(word: &[Symbol], s: usize, beta: f64, gamma: f64) -> Point {
    let n = word.len();
    let sf = s as f64;
    // x: fixed point of the composed inverse x-branches g_i(x) = x/beta + i/s
    let (mut ax, mut bx) = (1.0f64, 0.0f64);
    for k in (0..n).rev() {
        ax /= beta;
        bx = bx / beta + word[k] as f64 / sf;
    }
    let x = bx / (1.0 - ax);
    // y: fixed point of forward y-branches h_i(y) = gamma*y + i/s along the word
    let (mut ay, mut by) = (1.0f64, 0.0f64);
    for k in 0..n {
        ay *= gamma;
        by = gamma * by + word[k] as f64 / sf;
    }
    let y = by / (1.0 - ay);
    Point::new2(x, y)
}

/// A smooth invertible map with Jacobian evaluation, optional Markov coding,
/// and an exact integer path for linear systems. Immutable after construction.
#[derive(Clone, Debug)]
pub struct MapSystem {
    pub label: String,
    pub dim: usize,
    pub domain: Domain,
    dynamics: Dynamics,
    /// Power exponent: the system map is the k-th iterate of the base dynamics.
    pub power_k: usize,
    pub coding: Option<MarkovCoding>,
    /// Integer matrix of the system map for toral systems (base matrix to the
    /// k-th power).
    pub linear_data: Option<Vec<Vec<i64>>>,
    pub spec: SystemSpec,
}

pub fn make_system(spec: &SystemSpec) -> Result<MapSystem> {
    match spec {
        SystemSpec::Cat => {
            let mut sys = make_system(&SystemSpec::Toral { matrix: SystemSpec::cat_matrix() })?;
            sys.label = "cat".into();
            sys.spec = SystemSpec::Cat;
            Ok(sys)
        }
        SystemSpec::Toral { matrix } => make_toral(matrix, spec),
        SystemSpec::Horseshoe { s, beta, gamma } => {
            let full = vec![vec![1u8; *s]; *s];
            make_horseshoe(*s, *beta, *gamma, full, spec)
        }
        SystemSpec::Sft { transition } => {
            let s = transition.len();
            if s == 0 {
                return Err(Error::InvalidSpec("empty SFT alphabet".into()));
            }
            // geometric realization: s branches tiling [0,1], mild contraction
            make_horseshoe(s, s as f64, 1.0 / (2.0 * s as f64), transition.clone(), spec)
        }
        SystemSpec::Henon { a, b } => {
            if *b == 0.0 || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidSpec("henon requires finite a and b != 0".into()));
            }
            Ok(MapSystem {
                label: format!("henon({a},{b})"),
                dim: 2,
                domain: Domain::Rectangle { lo: vec![-4.0, -4.0], hi: vec![4.0, 4.0] },
                dynamics: Dynamics::Henon { a: *a, b: *b },
                power_k: 1,
                coding: None,
                linear_data: None,
                spec: spec.clone(),
            })
        }
        SystemSpec::Power { base, k } => {
            if *k < 1 {
                return Err(Error::InvalidSpec("power exponent k must be >= 1".into()));
            }
            let base_sys = make_system(base)?;
            Ok(base_sys.power(*k)?)
        }
    }
}

fn make_toral(matrix: &[Vec<i64>], spec: &SystemSpec) -> Result<MapSystem> {
    let d = matrix.len();
    if !(d == 2 || d == 3) || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidSpec("toral matrix must be square, dim 2 or 3".into()));
    }
    let a = Matrix::from_rows_vec(
        &matrix.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect::<Vec<_>>(),
    );
    let det = a.det().round() as i64;
    if det.abs() != 1 {
        return Err(Error::InvalidSpec(format!(
            "toral matrix must have |det| = 1, got {det}"
        )));
    }
    for ev in eigenvalues(&a) {
        let m = ev.norm();
        if (m - 1.0).abs() < 1e-9 {
            return Err(Error::NonHyperbolic { modulus: m });
        }
    }
    // edge-shift coding when all entries are nonnegative: the edge adjacency
    // matrix has the same Perron eigenvalue as A
    let coding = if matrix.iter().all(|r| r.iter().all(|&v| v >= 0)) {
        Some(edge_shift_coding(matrix, d)?)
    } else {
        None
    };
    Ok(MapSystem {
        label: format!("toral({matrix:?})"),
        dim: d,
        domain: Domain::Torus { dim: d },
        dynamics: Dynamics::ToralLinear { a },
        power_k: 1,
        coding,
        linear_data: Some(matrix.to_vec()),
        spec: spec.clone(),
    })
}

fn edge_shift_coding(matrix: &[Vec<i64>], d: usize) -> Result<MarkovCoding> {
    let mut tails = Vec::new();
    let mut heads = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for _ in 0..matrix[i][j] {
                tails.push(i);
                heads.push(j);
            }
        }
    }
    let m = tails.len();
    let mut transition = vec![vec![0u8; m]; m];
    for e in 0..m {
        for f in 0..m {
            if heads[e] == tails[f] {
                transition[e][f] = 1;
            }
        }
    }
    MarkovCoding::new(transition, 16, SeedRule::Anchor { point: Point::zero(d) })
}

fn make_horseshoe(
    s: usize,
    beta: f64,
    gamma: f64,
    transition: Vec<Vec<u8>>,
    spec: &SystemSpec,
) -> Result<MapSystem> {
    if beta <= 1.0 {
        return Err(Error::InvalidSpec(format!(
            "horseshoe expansion beta must exceed 1, got {beta}"
        )));
    }
    if s < 1 {
        return Err(Error::InvalidSpec("horseshoe needs at least one branch".into()));
    }
    if beta < s as f64 {
        return Err(Error::InvalidSpec(format!(
            "horseshoe branches overlap: beta = {beta} < s = {s}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0 / s as f64) {
        return Err(Error::InvalidSpec(format!(
            "horseshoe contraction gamma must lie in (0, 1/s], got {gamma}"
        )));
    }
    let coding = MarkovCoding::new(
        transition,
        16,
        SeedRule::HorseshoePeriodic { s, beta, gamma },
    )?;
    Ok(MapSystem {
        label: format!("horseshoe({s},{beta},{gamma})"),
        dim: 2,
        domain: Domain::Rectangle { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
        dynamics: Dynamics::Horseshoe { s, beta, gamma },
        power_k: 1,
        coding: Some(coding),
        linear_data: None,
        spec: spec.clone(),
    })
}

impl MapSystem {
    /// The k-th iterate as a system in its own right. Forward and Jacobian
    /// compose by the chain rule; the coding thins to k-blocks.
    pub fn power(&self, k: usize) -> Result<MapSystem> {
        if k == 1 {
            return Ok(self.clone());
        }
        let coding = match &self.coding {
            Some(c) => Some(c.power(k)?),
            None => None,
        };
        let linear_data = self.linear_data.as_ref().map(|a| int_matrix_pow(a, k));
        Ok(MapSystem {
            label: format!("power({},{})", self.label, k),
            dim: self.dim,
            domain: self.domain.clone(),
            dynamics: self.dynamics.clone(),
            power_k: self.power_k * k,
            coding,
            linear_data,
            spec: SystemSpec::Power { base: Box::new(self.spec.clone()), k },
        })
    }

    /// Replace the coding with a subshift over a symbol subset; the geometry
    /// is untouched, only the admissible itineraries shrink.
    pub fn restrict_coding(&self, symbols: &[Symbol], transition: Vec<Vec<u8>>) -> Result<MapSystem> {
        let coding = self
            .coding
            .as_ref()
            .ok_or_else(|| Error::MissingCoding(self.label.clone()))?;
        let restricted = coding.restrict(symbols, transition)?;
        let mut sys = self.clone();
        sys.coding = Some(restricted);
        sys.label = format!("{}|sub{:?}", self.label, symbols);
        Ok(sys)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.dynamics, Dynamics::ToralLinear { .. })
    }

    pub fn is_henon(&self) -> bool {
        matches!(self.dynamics, Dynamics::Henon { .. })
    }

    /// One application of the base dynamics (ignores `power_k`).
    fn forward_base(&self, p: &Point) -> Result<Point> {
        match &self.dynamics {
            Dynamics::ToralLinear { a, .. } => Ok(self.domain.normalize(&a.matvec(p))),
            Dynamics::Horseshoe { s, beta, gamma } => {
                let (x, y) = (p.get(0), p.get(1));
                let branch = horseshoe_branch(x, *s, *beta).ok_or(Error::Escape { index: 0 })?;
                let xs = branch as f64 / *s as f64;
                Ok(Point::new2(beta * (x - xs), gamma * y + xs))
            }
            Dynamics::Henon { a, b } => {
                let (x, y) = (p.get(0), p.get(1));
                let q = Point::new2(1.0 - a * x * x + y, b * x);
                if self.domain.contains(&q) {
                    Ok(q)
                } else {
                    Err(Error::Escape { index: 0 })
                }
            }
        }
    }

    fn inverse_base(&self, p: &Point) -> Result<Point> {
        match &self.dynamics {
            Dynamics::ToralLinear { a, .. } => {
                let inv = a.inverse().expect("unimodular matrix is invertible");
                Ok(self.domain.normalize(&inv.matvec(p)))
            }
            Dynamics::Horseshoe { s, beta, gamma } => {
                let (x, y) = (p.get(0), p.get(1));
                // image slab i occupies y in [i/s, i/s + gamma]
                let branch = horseshoe_branch_slab(y, *s, *gamma).ok_or(Error::Escape { index: 0 })?;
                let ys = branch as f64 / *s as f64;
                Ok(Point::new2(x / beta + ys, (y - ys) / gamma))
            }
            Dynamics::Henon { a, b } => {
                let (x, y) = (p.get(0), p.get(1));
                let px = y / b;
                let q = Point::new2(px, x - 1.0 + a * px * px);
                if self.domain.contains(&q) {
                    Ok(q)
                } else {
                    Err(Error::Escape { index: 0 })
                }
            }
        }
    }

    fn jacobian_base(&self, p: &Point) -> Result<Matrix> {
        match &self.dynamics {
            Dynamics::ToralLinear { a, .. } => Ok(*a),
            Dynamics::Horseshoe { s, beta, gamma } => {
                horseshoe_branch(p.get(0), *s, *beta).ok_or(Error::Escape { index: 0 })?;
                Ok(Matrix::from_rows(&[&[*beta, 0.0], &[0.0, *gamma]]))
            }
            Dynamics::Henon { a, b } => {
                Ok(Matrix::from_rows(&[&[-2.0 * a * p.get(0), 1.0], &[*b, 0.0]]))
            }
        }
    }

    /// The system map (base dynamics iterated `power_k` times).
    pub fn forward(&self, p: &Point) -> Result<Point> {
        let mut q = *p;
        for i in 0..self.power_k {
            q = self.forward_base(&q).map_err(|_| Error::Escape { index: i })?;
        }
        Ok(q)
    }

    pub fn inverse(&self, p: &Point) -> Result<Point> {
        let mut q = *p;
        for i in 0..self.power_k {
            q = self.inverse_base(&q).map_err(|_| Error::Escape { index: i })?;
        }
        Ok(q)
    }

    /// Jacobian of the system map at `p` (ordered product over `power_k` base
    /// steps).
    pub fn jacobian(&self, p: &Point) -> Result<Matrix> {
        let mut q = *p;
        let mut j = Matrix::identity(self.dim);
        for i in 0..self.power_k {
            let step = self.jacobian_base(&q).map_err(|_| Error::Escape { index: i })?;
            j = step.mul(&j);
            if i + 1 < self.power_k {
                q = self.forward_base(&q).map_err(|_| Error::Escape { index: i })?;
            }
        }
        Ok(j)
    }

    /// Symbol of the horseshoe strip containing the point, when meaningful.
    pub fn itinerary_symbol(&self, p: &Point) -> Option<Symbol> {
        match &self.dynamics {
            Dynamics::Horseshoe { s, beta, .. } => {
                horseshoe_branch(p.get(0), *s, *beta).map(|b| b as Symbol)
            }
            _ => None,
        }
    }
}

fn horseshoe_branch(x: f64, s: usize, beta: f64) -> Option<usize> {
    let tol = 1e-12;
    if x < -tol || x > 1.0 + tol {
        return None;
    }
    let sf = s as f64;
    let i = ((x * sf).floor() as isize).clamp(0, s as isize - 1) as usize;
    // candidate strip [i/s, i/s + 1/beta]; allow the left edge of the next strip
    for cand in [i, i.saturating_sub(1)] {
        let lo = cand as f64 / sf;
        if x >= lo - tol && x <= lo + 1.0 / beta + tol {
            return Some(cand);
        }
    }
    None
}

fn horseshoe_branch_slab(y: f64, s: usize, gamma: f64) -> Option<usize> {
    let tol = 1e-12;
    if y < -tol || y > 1.0 + tol {
        return None;
    }
    let sf = s as f64;
    let i = ((y * sf).floor() as isize).clamp(0, s as isize - 1) as usize;
    for cand in [i, i.saturating_sub(1)] {
        let lo = cand as f64 / sf;
        if y >= lo - tol && y <= lo + gamma + tol {
            return Some(cand);
        }
    }
    None
}

fn int_matrix_pow(a: &[Vec<i64>], k: usize) -> Vec<Vec<i64>> {
    let d = a.len();
    let mut out: Vec<Vec<i64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1 } else { 0 }).collect())
        .collect();
    for _ in 0..k {
        let mut next = vec![vec![0i64; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0i64;
                for l in 0..d {
                    s += a[i][l] * out[l][j];
                }
                next[i][j] = s;
            }
        }
        out = next;
    }
    out
}

/// Orbit x, f(x), ..., f^n(x); torus points are reduced into [0,1)^d.
/// Escapes from a rectangle domain carry the exit index.
pub fn orbit_segment(system: &MapSystem, x: &Point, n: usize) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = system.domain.normalize(x);
    out.push(p);
    for i in 0..n {
        p = system.forward(&p).map_err(|_| Error::Escape { index: i })?;
        out.push(p);
    }
    Ok(out)
}
