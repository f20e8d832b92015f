use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::measure::BivariateMeasure;
use super::BimoduleError;
use crate::circle_measures::Point;
use crate::Scalar;

const ZERO_TOL: f64 = 1e-12;

/// A finite abelian group H = Π ℤ/n_i acting on a finite probability space
/// (X, ν) by measure-preserving permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKoopmanModel {
    invariants: Vec<u64>,
    weights: Vec<f64>,
    /// perms[h][x] = T_h(x), with h indexed in mixed radix.
    perms: Vec<Vec<usize>>,
    lcm: i64,
}

/// JSON form: one permutation of X per cyclic factor of H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoopmanDoc {
    pub invariants: Vec<u64>,
    pub perms: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// A vector of L²(X) ⊗ L²(Ĥ) in the basis e_ĥ: component h is a function on X.
pub type CrossedVector = Vec<Vec<Complex64>>;

fn invalid(msg: impl Into<String>) -> BimoduleError {
    BimoduleError::InvalidModel(msg.into())
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

impl FiniteKoopmanModel {
    /// Generator i of ℤ/n_i acts by `gens[i]`; ν defaults to uniform.
    pub fn new(invariants: Vec<u64>, gens: Vec<Vec<usize>>, weights: Option<Vec<f64>>) -> Result<Self, BimoduleError> {
        if invariants.len() != gens.len() {
            return Err(invalid("one permutation per cyclic factor is required"));
        }
        if invariants.iter().any(|&d| d == 0) {
            return Err(invalid("H must be finite"));
        }
        let size = gens.first().map(Vec::len).or(weights.as_ref().map(Vec::len)).unwrap_or(1);
        let weights = weights.unwrap_or_else(|| vec![1.0 / size as f64; size]);
        if weights.len() != size || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("weights must be positive, one per point"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > ZERO_TOL {
            return Err(invalid("weights must sum to 1"));
        }
        let identity: Vec<usize> = (0..size).collect();
        for (g, &d) in gens.iter().zip(&invariants) {
            let mut seen = vec![false; size];
            if g.len() != size || g.iter().any(|&x| x >= size || std::mem::replace(&mut seen[x], true)) {
                return Err(invalid(format!("{g:?} is not a permutation of {size} points")));
            }
            if g.iter().enumerate().any(|(x, &y)| weights[x] != weights[y]) {
                return Err(invalid(format!("{g:?} does not preserve ν")));
            }
            let mut p = identity.clone();
            for _ in 0..d {
                p = compose(g, &p);
            }
            if p != identity {
                return Err(invalid(format!("{g:?} has order not dividing {d}")));
            }
        }
        for a in &gens {
            for b in &gens {
                if compose(a, b) != compose(b, a) {
                    return Err(invalid("generator permutations do not commute"));
                }
            }
        }
        let order: u64 = invariants.iter().product();
        let mut perms = Vec::with_capacity(order as usize);
        for h in 0..order as usize {
            let mut p = identity.clone();
            for (g, k) in gens.iter().zip(Self::digits_of(&invariants, h)) {
                for _ in 0..k {
                    p = compose(g, &p);
                }
            }
            perms.push(p);
        }
        let lcm = invariants.iter().fold(1u64, |a, &b| a.lcm(&b)) as i64;
        Ok(FiniteKoopmanModel {
            invariants,
            weights,
            perms,
            lcm,
        })
    }

    /// ℤ/n acting on itself by translation with uniform ν.
    pub fn translation(n: usize) -> Result<Self, BimoduleError> {
        Self::new(vec![n as u64], vec![(0..n).map(|x| (x + 1) % n).collect()], None)
    }

    pub fn from_doc(doc: KoopmanDoc) -> Result<Self, BimoduleError> {
        Self::new(doc.invariants, doc.perms, doc.weights)
    }

    pub fn to_doc(&self) -> KoopmanDoc {
        let gens = (0..self.invariants.len())
            .map(|i| {
                let mut d = vec![0u64; self.invariants.len()];
                d[i] = 1 % self.invariants[i];
                self.perms[self.index(&d)].clone()
            })
            .collect();
        KoopmanDoc {
            invariants: self.invariants.clone(),
            perms: gens,
            weights: Some(self.weights.clone()),
        }
    }

    fn digits_of(invariants: &[u64], mut h: usize) -> Vec<u64> {
        invariants
            .iter()
            .map(|&d| {
                let x = h as u64 % d;
                h /= d as usize;
                x
            })
            .collect()
    }

    pub fn digits(&self, h: usize) -> Vec<u64> {
        Self::digits_of(&self.invariants, h)
    }

    pub fn index(&self, digits: &[u64]) -> usize {
        digits
            .iter()
            .zip(&self.invariants)
            .rev()
            .fold(0usize, |acc, (&x, &d)| acc * d as usize + (x % d) as usize)
    }

    pub fn invariants(&self) -> &[u64] {
        &self.invariants
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn points(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.digits(a), self.digits(b));
        self.index(&x.iter().zip(&y).map(|(p, q)| p + q).collect::<Vec<_>>())
    }

    pub fn neg(&self, a: usize) -> usize {
        let x = self.digits(a);
        self.index(&x.iter().zip(&self.invariants).map(|(p, d)| (d - p) % d).collect::<Vec<_>>())
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn act(&self, h: usize, x: usize) -> usize {
        self.perms[h][x]
    }

    /// ψ_j(h) = exp(2πi Σ j_i h_i / n_i); characters share the indexing of H.
    pub fn character(&self, j: usize, h: usize) -> Complex64 {
        let (a, b) = (self.digits(j), self.digits(h));
        let k: i64 = a
            .iter()
            .zip(&b)
            .zip(&self.invariants)
            .map(|((&x, &y), &d)| (x * y % d) as i64 * (self.lcm / d as i64))
            .sum();
        Complex64::root_of_unity(k, self.lcm).unwrap_or_default()
    }

    /// Circle points of Ĥ when H is cyclic: ψ_j ↦ j/n.
    pub fn dual_circle(&self) -> Option<Vec<Point>> {
        match self.invariants.as_slice() {
            [n] => Some((0..*n as i64).map(|j| Point::rational(j, *n as i64)).collect()),
            _ => None,
        }
    }

    pub fn mean(&self, f: &[Complex64]) -> Complex64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// ⟨f, g⟩ in L²(X, ν).
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b.conj() * w)
            .sum()
    }

    /// α_h(f) = π(h)f = f ∘ T_h⁻¹.
    pub fn koopman(&self, h: usize, f: &[Complex64]) -> Vec<Complex64> {
        let inv = self.neg(h);
        (0..f.len()).map(|x| f[self.act(inv, x)]).collect()
    }

    /// E_ψ f = (1/|H|) Σ_g ψ(g) π(g) f, so that π(g) = Σ_ψ conj ψ(g) E_ψ.
    pub fn spectral_projection(&self, j: usize, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.order() as f64;
        let mut out = vec![Complex64::default(); f.len()];
        for g in 0..self.order() {
            let c = self.character(j, g) / n;
            for (o, v) in out.iter_mut().zip(self.koopman(g, f)) {
                *o += c * v;
            }
        }
        out
    }

    /// μ_{f₁,f₂}(ψ) = ⟨E_ψ f₁, f₂⟩ for every ψ ∈ Ĥ.
    pub fn spectral_measure(&self, f1: &[Complex64], f2: &[Complex64]) -> Vec<Complex64> {
        (0..self.order())
            .map(|j| self.inner(&self.spectral_projection(j, f1), f2))
            .collect()
    }

    /// Characters with E_ψ f ≠ 0.
    pub fn spectral_support(&self, f: &[Complex64]) -> BTreeSet<usize> {
        (0..self.order())
            .filter(|&j| self.inner(&self.spectral_projection(j, f), f).norm() > ZERO_TOL)
            .collect()
    }

    /// Characters carried by L²(X, ν) ⊖ ℂ1.
    pub fn full_spectral_support(&self) -> BTreeSet<usize> {
        (0..self.points())
            .flat_map(|x| self.spectral_support(&self.centered_indicator(x)))
            .collect()
    }

    /// 1_{x} − ν({x}).
    pub fn centered_indicator(&self, x: usize) -> Vec<Complex64> {
        (0..self.points())
            .map(|y| Complex64::new(if x == y { 1.0 } else { 0.0 } - self.weights[x], 0.0))
            .collect()
    }

    /// A real mean-zero f₀ whose spectral measure has maximal support: the
    /// centered indicators are swept in order and added with the first small
    /// integer coefficient that does not cancel an already covered character.
    pub fn maximal_spectral_vector(&self) -> Vec<Complex64> {
        let mut f = vec![Complex64::default(); self.points()];
        let mut support = BTreeSet::new();
        for x in 0..self.points() {
            let g = self.centered_indicator(x);
            let gs = self.spectral_support(&g);
            if gs.is_subset(&support) {
                continue;
            }
            let target: BTreeSet<usize> = support.union(&gs).copied().collect();
            for c in 1..=(self.order() as i64 + 2) {
                let cand: Vec<Complex64> = f.iter().zip(&g).map(|(a, b)| a + b * c as f64).collect();
                if self.spectral_support(&cand) == target {
                    f = cand;
                    support = target;
                    break;
                }
            }
        }
        f
    }

    /// Maximal spectral type μ_{f₀}(ψ), real and nonnegative.
    pub fn maximal_spectral_type(&self) -> (Vec<Complex64>, Vec<f64>) {
        let f0 = self.maximal_spectral_vector();
        let mu = self.spectral_measure(&f0, &f0).iter().map(|c| c.re).collect();
        (f0, mu)
    }

    pub fn omega(&self) -> CrossedVector {
        let mut v = vec![vec![Complex64::default(); self.points()]; self.order()];
        v[0] = vec![Complex64::new(1.0, 0.0); self.points()];
        v
    }

    /// w_g acts on L²(Ĥ) by multiplication with ĝ: (w_g V)[k] = V[k − g].
    pub fn apply_w(&self, g: usize, v: &CrossedVector) -> CrossedVector {
        (0..self.order()).map(|k| v[self.sub(k, g)].clone()).collect()
    }

    /// α(f) = Σ_h α_h(f) ⊗ e_ĥ acts diagonally in h.
    pub fn apply_alpha(&self, f: &[Complex64], v: &CrossedVector) -> CrossedVector {
        (0..self.order())
            .map(|h| {
                let fh = self.koopman(h, f);
                v[h].iter().zip(fh).map(|(a, b)| a * b).collect()
            })
            .collect()
    }

    /// Right multiplication by w_q on vectors xΩ, x in the crossed product.
    pub fn apply_w_right(&self, q: usize, v: &CrossedVector) -> CrossedVector {
        let mut out = vec![vec![Complex64::default(); self.points()]; self.order()];
        for (h, comp) in v.iter().enumerate() {
            out[self.add(h, q)] = self.koopman(q, comp);
        }
        out
    }

    pub fn crossed_inner(&self, v: &CrossedVector, w: &CrossedVector) -> Complex64 {
        v.iter().zip(w).map(|(a, b)| self.inner(a, b)).sum()
    }

    /// The vector α(f)w_hΩ.
    pub fn element_vector(&self, f: &[Complex64], h: usize) -> CrossedVector {
        self.apply_alpha(f, &self.apply_w(h, &self.omega()))
    }

    fn require_mean_zero(&self, f: &[Complex64]) -> Result<(), BimoduleError> {
        let m = self.mean(f);
        if m.norm() > ZERO_TOL {
            Err(BimoduleError::NotMeanZero(m.norm()))
        } else {
            Ok(())
        }
    }

    fn require_function(&self, f: &[Complex64]) -> Result<(), BimoduleError> {
        if f.len() != self.points() {
            return Err(BimoduleError::Size(format!("function of length {} on {} points", f.len(), self.points())));
        }
        Ok(())
    }

    /// ⟨w_{g₁}α(f₁)w_{h₁}w_{g₂}Ω, α(f₂)w_{h₂}Ω⟩ and the double character sum
    /// ∫∫ conj ψ(g₂)·conj ψ(h₁h₂⁻¹)·χ(g₁g₂h₁h₂⁻¹) dμ_{f₁,f₂}(ψ) dλ(χ).
    #[allow(clippy::too_many_arguments)]
    pub fn snag_identity_check(
        &self,
        f1: &[Complex64],
        f2: &[Complex64],
        g1: usize,
        g2: usize,
        h1: usize,
        h2: usize,
    ) -> Result<SnagResult, BimoduleError> {
        self.require_function(f1)?;
        self.require_function(f2)?;
        self.require_mean_zero(f1)?;
        self.require_mean_zero(f2)?;
        let left = self.apply_w(g1, &self.apply_alpha(f1, &self.apply_w(h1, &self.apply_w(g2, &self.omega()))));
        let lhs = self.crossed_inner(&left, &self.element_vector(f2, h2));
        let rhs = self.snag_sum(f1, f2, g1, g2, h1, h2, true);
        Ok(SnagResult {
            lhs,
            rhs,
            defect: (lhs - rhs).norm(),
        })
    }

    /// The double character sum; `conj_g2 = false` uses ψ(g₂) in place of its conjugate.
    #[allow(clippy::too_many_arguments)]
    pub fn snag_sum(
        &self,
        f1: &[Complex64],
        f2: &[Complex64],
        g1: usize,
        g2: usize,
        h1: usize,
        h2: usize,
        conj_g2: bool,
    ) -> Complex64 {
        let mu = self.spectral_measure(f1, f2);
        let n = self.order();
        let h12 = self.sub(h1, h2);
        let all = self.add(self.add(g1, g2), h12);
        let lambda: Complex64 = (0..n).map(|chi| self.character(chi, all)).sum::<Complex64>() / n as f64;
        let inner: Complex64 = (0..n)
            .map(|psi| {
                let a = self.character(psi, g2);
                let a = if conj_g2 { a.conj() } else { a };
                a * self.character(psi, h12).conj() * mu[psi]
            })
            .sum();
        inner * lambda
    }

    /// η_{ζ₁,ζ₂} on Ĥ × Ĥ from κ(p,q) = ⟨w_p ζ₁ w_q, ζ₂⟩.
    pub fn eta(&self, z1: &CrossedVector, z2: &CrossedVector) -> Result<BivariateMeasure<Complex64>, BimoduleError> {
        let n = self.order();
        let mut k = vec![vec![Complex64::default(); n]; n];
        for q in 0..n {
            let right = self.apply_w_right(q, z1);
            for (p, row) in k.iter_mut().enumerate() {
                row[q] = self.crossed_inner(&self.apply_w(p, &right), z2);
            }
        }
        let mut points = Vec::with_capacity(n * n);
        for chi in 0..n {
            let a: Vec<Complex64> = (0..n)
                .map(|q| (0..n).map(|p| k[p][q] * self.character(chi, p).conj()).sum())
                .collect();
            for psi in 0..n {
                let v: Complex64 = (0..n).map(|q| a[q] * self.character(psi, q).conj()).sum();
                points.push(((chi, psi), v / (n * n) as f64));
            }
        }
        let m = BivariateMeasure::from_points(n, points.into_iter().filter(|(_, v)| v.norm() > ZERO_TOL * 1e-3))?;
        match self.dual_circle() {
            Some(c) => m.with_circle(c),
            None => Ok(m),
        }
    }

    /// S_*(μ⊗λ) with S(ψ, χ) = (χ, χψ) and λ uniform on Ĥ.
    pub fn transport_s(&self, mu: &[f64]) -> Result<BivariateMeasure<Complex64>, BimoduleError> {
        let n = self.order();
        if mu.len() != n {
            return Err(BimoduleError::Size(format!("{} masses for |Ĥ| = {n}", mu.len())));
        }
        let mut points = Vec::new();
        for (psi, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for chi in 0..n {
                points.push(((chi, self.add(chi, psi)), Complex64::new(m / n as f64, 0.0)));
            }
        }
        let out = BivariateMeasure::from_points(n, points)?;
        match self.dual_circle() {
            Some(c) => out.with_circle(c),
            None => Ok(out),
        }
    }

    /// max |S_*(μ_{f₀}⊗λ) − η_{f₀⊗1}| for the maximal spectral vector f₀.
    pub fn transport_defect(&self) -> Result<f64, BimoduleError> {
        let (f0, mu) = self.maximal_spectral_type();
        let z = self.element_vector(&f0, 0);
        let eta = self.eta(&z, &z)?;
        Ok(self.transport_s(&mu)?.max_defect(&eta))
    }

    /// Compares the fiber coefficients ηᵗ(1 ⊗ ψ ↦ ψ(m)) of η_{x,x}, x = α(f),
    /// with τ(x w_m x* w_m*)·χ_t(m) from the crossed product. Returns
    /// (max defect, |τ(x w_m x* w_m*)| for every m).
    pub fn fiber_correlation_check(&self, f: &[Complex64]) -> Result<(f64, Vec<f64>), BimoduleError> {
        self.require_function(f)?;
        let n = self.order();
        let x = self.element_vector(f, 0);
        let eta = self.eta(&x, &x)?;
        let fibers = super::disintegrate(&eta, super::Axis::First, super::Base::Haar)?;
        let fbar: Vec<Complex64> = f.iter().map(|c| c.conj()).collect();
        let mut defect: f64 = 0.0;
        let mut corr = Vec::with_capacity(n);
        for m in 0..n {
            let v = self.apply_w(self.neg(m), &self.omega());
            let v = self.apply_w(m, &self.apply_alpha(&fbar, &v));
            let tau = self.crossed_inner(&v, &self.element_vector(&fbar, 0));
            corr.push(tau.norm());
            for t in 0..n {
                let lhs = fibers
                    .fibers
                    .get(&t)
                    .map(|fib| fib.integrate(|_, s| self.character(s, m)))
                    .unwrap_or_default();
                defect = defect.max((lhs - tau * self.character(t, m)).norm());
            }
        }
        Ok((defect, corr))
    }

    /// Spectral projections sum to the identity and are mutually orthogonal
    /// idempotents on L²(X, ν) ⊖ ℂ1; returns the max deviation over centered
    /// indicators.
    pub fn resolution_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.points() {
            let f = self.centered_indicator(x);
            let mut sum = vec![Complex64::default(); f.len()];
            let projs: Vec<Vec<Complex64>> = (0..self.order()).map(|j| self.spectral_projection(j, &f)).collect();
            for p in &projs {
                for (s, v) in sum.iter_mut().zip(p) {
                    *s += v;
                }
            }
            worst = worst.max(sum.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            for (j, p) in projs.iter().enumerate() {
                let pp = self.spectral_projection(j, p);
                worst = worst.max(pp.iter().zip(p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Characters are orthonormal in L²(H, counting/|H|).
    pub fn character_defect(&self) -> f64 {
        let n = self.order();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let s: Complex64 = (0..n).map(|h| self.character(a, h) * self.character(b, h).conj()).sum::<Complex64>() / n as f64;
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }

    /// Subgroups G ≤ Ĥ, as sets of character indices.
    pub fn dual_subgroups(&self) -> Vec<BTreeSet<usize>> {
        let n = self.order();
        let rank = self.invariants.len().max(1);
        let mut found: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(gens) = stack.pop() {
            found.insert(self.closure(&gens));
            if gens.len() < rank {
                let start = gens.last().map_or(0, |&g| g + 1);
                for g in start..n {
                    let mut next = gens.clone();
                    next.push(g);
                    stack.push(next);
                }
            }
        }
        found.into_iter().collect()
    }

    fn closure(&self, gens: &[usize]) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = [0].into();
        loop {
            let next: BTreeSet<usize> = set
                .iter()
                .flat_map(|&a| gens.iter().map(move |&g| (a, g)))
                .map(|(a, g)| self.add(a, g))
                .chain(set.iter().copied())
                .collect();
            if next.len() == set.len() {
                return set;
            }
            set = next;
        }
    }

    /// For every subgroup G ≤ Ĥ: m_Ĥ ≪ m_G forces G = Ĥ. Returns the number of
    /// subgroups checked and whether the implication held for all of them.
    pub fn subgroup_support_check(&self) -> (usize, bool) {
        let subs = self.dual_subgroups();
        let n = self.order();
        let ok = subs.iter().all(|g| g.len() < n || g.len() == n && (0..n).all(|j| g.contains(&j)));
        (subs.len(), ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnagResult {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub defect: f64,
}
