//! Integer matrices for semidirect products and integer lattices for abelian
//! subgroup membership.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Option<Self> {
        let d = rows.len();
        (d > 0 && rows.iter().all(|r| r.len() == d)).then_some(IntMatrix { rows })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Option<Self> {
        IntMatrix::new(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn identity(d: usize) -> Self {
        IntMatrix {
            rows: (0..d)
                .map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim();
        IntMatrix {
            rows: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).map(|k| &self.rows[i][k] * &other.rows[k][j]).sum())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Binary exponentiation for m ≥ 0.
    pub fn pow(&self, mut m: u64) -> IntMatrix {
        let mut acc = IntMatrix::identity(self.dim());
        let mut base = self.clone();
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            m >>= 1;
        }
        acc
    }

    pub fn determinant(&self) -> BigInt {
        let q = self.to_rational();
        let d = self.dim();
        let mut a = q;
        let mut det = BigRational::one();
        for c in 0..d {
            let Some(p) = (c..d).find(|&r| !a[r][c].is_zero()) else {
                return BigInt::zero();
            };
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            det *= a[c][c].clone();
            for r in c + 1..d {
                let f = &a[r][c] / &a[c][c];
                for k in c..d {
                    let t = &f * &a[c][k];
                    a[r][k] -= t;
                }
            }
        }
        det.to_integer()
    }

    fn to_rational(&self) -> Vec<Vec<BigRational>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
            .collect()
    }

    /// Integer inverse; exists iff det = ±1.
    pub fn inverse(&self) -> Option<IntMatrix> {
        if self.determinant().abs() != BigInt::one() {
            return None;
        }
        let d = self.dim();
        let mut a = self.to_rational();
        let mut inv: Vec<Vec<BigRational>> = IntMatrix::identity(d).to_rational();
        for c in 0..d {
            let p = (c..d).find(|&r| !a[r][c].is_zero())?;
            a.swap(p, c);
            inv.swap(p, c);
            let piv = a[c][c].clone();
            for k in 0..d {
                a[c][k] /= piv.clone();
                inv[c][k] /= piv.clone();
            }
            for r in 0..d {
                if r != c && !a[r][c].is_zero() {
                    let f = a[r][c].clone();
                    for k in 0..d {
                        let t = &f * &a[c][k];
                        a[r][k] -= t;
                        let t = &f * &inv[c][k];
                        inv[r][k] -= t;
                    }
                }
            }
        }
        IntMatrix::new(inv.into_iter().map(|r| r.into_iter().map(|x| x.to_integer()).collect()).collect())
    }
}

/// Integer lattice in ℤ^n kept in row echelon form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    dim: usize,
    basis: Vec<Vec<BigInt>>,
}

impl Lattice {
    pub fn new(dim: usize, generators: &[Vec<BigInt>]) -> Self {
        let mut rows: Vec<Vec<BigInt>> = generators.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
        let mut basis = Vec::new();
        for col in 0..dim {
            // Euclid on this column until at most one row has a nonzero entry
            loop {
                let mut nz: Vec<usize> = (0..rows.len()).filter(|&r| !rows[r][col].is_zero()).collect();
                if nz.len() <= 1 {
                    break;
                }
                nz.sort_by(|&a, &b| rows[a][col].abs().cmp(&rows[b][col].abs()));
                let p = nz[0];
                for &r in &nz[1..] {
                    let q = rows[r][col].div_floor(&rows[p][col]);
                    let pivot = rows[p].clone();
                    for (x, y) in rows[r].iter_mut().zip(&pivot) {
                        *x -= &q * y;
                    }
                }
            }
            if let Some(p) = (0..rows.len()).find(|&r| !rows[r][col].is_zero()) {
                let mut row = rows.swap_remove(p);
                if row[col].is_negative() {
                    row.iter_mut().for_each(|x| *x = -x.clone());
                }
                basis.push(row);
            }
            rows.retain(|r| r.iter().any(|x| !x.is_zero()));
        }
        Lattice { dim, basis }
    }

    pub fn from_i64(dim: usize, generators: &[Vec<i64>]) -> Self {
        let g: Vec<Vec<BigInt>> = generators.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect();
        Lattice::new(dim, &g)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        let mut r: Vec<BigInt> = v.to_vec();
        for row in &self.basis {
            let col = row.iter().position(|x| !x.is_zero()).unwrap();
            if r[..col].iter().any(|x| !x.is_zero()) {
                return false;
            }
            let (q, rem) = r[col].div_rem(&row[col]);
            if !rem.is_zero() {
                return false;
            }
            for (x, y) in r.iter_mut().zip(row) {
                *x -= &q * y;
            }
        }
        r.iter().all(|x| x.is_zero())
    }

    pub fn contains_i64(&self, v: &[i64]) -> bool {
        let b: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.contains(&b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_map_inverse_and_powers() {
        let a = IntMatrix::from_i64(&[vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(a.determinant(), BigInt::one());
        let inv = a.inverse().unwrap();
        assert_eq!(inv, IntMatrix::from_i64(&[vec![1, -1], vec![-1, 2]]).unwrap());
        assert_eq!(a.mul(&inv), IntMatrix::identity(2));
        assert_eq!(a.pow(3), a.mul(&a).mul(&a));
        assert!(IntMatrix::from_i64(&[vec![2, 0], vec![0, 1]]).unwrap().inverse().is_none());
    }

    #[test]
    fn lattice_membership() {
        let l = Lattice::from_i64(2, &[vec![2, 0], vec![1, 3]]);
        assert!(l.contains_i64(&[3, 3]));
        assert!(l.contains_i64(&[0, 6]));
        assert!(!l.contains_i64(&[0, 3]));
        assert!(!l.contains_i64(&[1, 0]));
        let full = Lattice::from_i64(2, &[vec![2, 3], vec![1, 2]]);
        assert!(full.contains_i64(&[1, 0]) && full.contains_i64(&[0, 1]));
        assert_eq!(Lattice::from_i64(3, &[]).rank(), 0);
    }
}
