//! Dense matrices over real or complex scalars.
//!
//! Storage is row-major. All operations are pure and allocate their output,
//! so matrices can be shared freely between worker threads.

use std::fmt::Debug;
use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{Num, NumAssign, Zero};

use crate::error::{dim_err, Error, Result};
use crate::scalar::Real;

/// Matrix element: any copyable numeric field element.
pub trait Element: Copy + Num + NumAssign + Send + Sync + Debug {}
impl<T: Copy + Num + NumAssign + Send + Sync + Debug> Element for T {}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type ComplexMatrix<R> = Matrix<Complex<R>>;
pub type RealMatrix<R> = Matrix<R>;

impl<T: Element> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return dim_err(format!("empty matrix {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return dim_err(format!("{} entries supplied for a {rows}x{cols} matrix", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return dim_err("ragged rows");
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<U: Element>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return dim_err(format!("elementwise op on {:?} and {:?}", self.shape(), other.shape()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return dim_err(format!("cannot multiply {:?} by {:?}", self.shape(), other.shape()));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return dim_err(format!("cannot multiply {:?} by a vector of length {}", self.shape(), v.len()));
        }
        Ok(self.matvec_unchecked(v))
    }

    pub(crate) fn matvec_unchecked(&self, v: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> Matrix<R> {
    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, x| m.max(x.abs()))
    }
}

impl<R: Real> Matrix<Complex<R>> {
    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn from_real(m: &Matrix<R>) -> Self {
        m.map(|x| Complex::new(x, R::zero()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest entrywise distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).fold(R::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    pub fn is_hermitian(&self, tol: R) -> bool {
        self.is_square() && self.max_abs_diff(&self.hermitian()) <= tol
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> R {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<R>()).fold(R::zero(), R::max)
    }
}

/// Inverse by LU factorization with partial pivoting.
///
/// Fails with [`Error::Singular`] when a pivot vanishes or the reciprocal
/// 1-norm condition number falls below [`Real::rcond_floor`].
pub fn invert_lu<R: Real>(a: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>> {
    if !a.is_square() {
        return dim_err(format!("cannot invert a {:?} matrix", a.shape()));
    }
    if !a.all_finite() {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.max_abs();
    if scale == R::zero() {
        return Err(Error::Singular { rcond: 0.0 });
    }

    for k in 0..n {
        let (p, pivot_mag) =
            (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, R::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_mag <= scale * R::epsilon() {
            return Err(Error::Singular { rcond: 0.0 });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= factor * u;
            }
        }
    }

    // Solve L U X = P I column by column.
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut col = vec![Complex::zero(); n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = if perm[i] == j { Complex::new(R::one(), R::zero()) } else { Complex::zero() };
        }
        for i in 0..n {
            for k in 0..i {
                let l = lu[(i, k)];
                let ck = col[k];
                col[i] -= l * ck;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = lu[(i, k)];
                let ck = col[k];
                col[i] -= u * ck;
            }
            col[i] /= lu[(i, i)];
        }
        inv.set_column(j, &col);
    }

    let rcond = R::one() / (a.norm_one() * inv.norm_one());
    if !rcond.is_finite() || rcond < R::rcond_floor() {
        return Err(Error::Singular { rcond: rcond.to_f64().unwrap_or(0.0) });
    }
    Ok(inv)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns real eigenvalues in ascending order and the unitary matrix whose
/// columns are the matching eigenvectors.
pub fn hermitian_eigen<R: Real>(a: &ComplexMatrix<R>) -> Result<(Vec<R>, ComplexMatrix<R>)> {
    let scale = a.max_abs().max(R::min_positive_value());
    if !a.is_hermitian(scale * R::lit(1e-12).max(R::epsilon() * R::lit(8.0))) {
        return Err(Error::NotHermitian);
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut v = ComplexMatrix::<R>::identity(n);
    let tol = scale * R::epsilon();

    for _sweep in 0..100 {
        let off: R = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<R>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= tol * R::lit(1e-3) {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (R::lit(2.0) * mag);
                let t = if tau >= R::zero() {
                    R::one() / (tau + (R::one() + tau * tau).sqrt())
                } else {
                    -R::one() / (-tau + (R::one() + tau * tau).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = t * c;
                // Rotation G on the (p, q) plane: columns p and q of G are
                // [c, -s e^{-i phi}] and [s, c e^{-i phi}].
                let g_pp = Complex::new(c, R::zero());
                let g_pq = Complex::new(s, R::zero());
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                // M <- M G
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * g_pp + miq * g_qp;
                    m[(i, q)] = mip * g_pq + miq * g_qq;
                }
                // M <- G^H M
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = g_pp.conj() * mpj + g_qp.conj() * mqj;
                    m[(q, j)] = g_pq.conj() * mpj + g_qq.conj() * mqj;
                }
                m[(p, q)] = Complex::zero();
                m[(q, p)] = Complex::zero();
                m[(p, p)].im = R::zero();
                m[(q, q)].im = R::zero();
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * g_pp + viq * g_qp;
                    v[(i, q)] = vip * g_pq + viq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// Hermitian square root `S` of a positive semidefinite matrix, `S·Sᴴ = R`.
///
/// Slightly negative eigenvalues from rounding are clamped to zero; anything
/// below `-1e-10` (relative to the matrix scale) is rejected.
pub fn psd_sqrt<R: Real>(r: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>> {
    if !r.is_square() {
        return dim_err(format!("square root of a {:?} matrix", r.shape()));
    }
    let (values, vectors) = hermitian_eigen(r)?;
    let scale = r.max_abs().max(R::one());
    let floor = -R::lit(1e-10) * scale;
    if let Some(&min) = values.first() {
        if min < floor {
            return Err(Error::Indefinite(min.to_f64().unwrap_or(f64::NAN)));
        }
    }
    let roots: Vec<R> = values.iter().map(|&l| l.max(R::zero()).sqrt()).collect();
    let n = r.rows;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).fold(Complex::zero(), |acc, k| acc + vectors[(i, k)] * vectors[(j, k)].conj() * roots[k])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn random(rng: &mut RngStream, n: usize) -> ComplexMatrix<f64> {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.standard_normal(), rng.standard_normal()))
    }

    fn naive_product(a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>) -> ComplexMatrix<f64> {
        let mut out = ComplexMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = C::zero();
                for k in 0..a.cols() {
                    acc += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    #[test]
    fn identity_and_scalar_products() {
        let mut rng = RngStream::new(3);
        let a = random(&mut rng, 2);
        assert_eq!(ComplexMatrix::identity(2).matmul(&a).unwrap(), a);
        let six = Matrix::new(1, 1, vec![2.0]).unwrap().matmul(&Matrix::new(1, 1, vec![3.0]).unwrap());
        assert_eq!(six.unwrap().as_slice(), &[6.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = RngStream::new(11);
        let a = random(&mut rng, 4);
        let b = random(&mut rng, 4);
        let fast = a.matmul(&b).unwrap();
        let slow = naive_product(&a, &b);
        for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((x - y).norm() <= 1e-12 * y.norm().max(1.0));
        }
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = ComplexMatrix::<f64>::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::Dimension(_))));
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(Matrix::<f64>::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matmul_is_associative() {
        let mut rng = RngStream::new(5);
        let (a, b, cm) = (random(&mut rng, 4), random(&mut rng, 4), random(&mut rng, 4));
        let left = a.matmul(&b).unwrap().matmul(&cm).unwrap();
        let right = a.matmul(&b.matmul(&cm).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right) <= 1e-10 * left.max_abs());
    }

    #[test]
    fn inverse_of_scaled_identity() {
        let two = ComplexMatrix::<f64>::identity(4).scale(c(2.0, 0.0));
        let inv = invert_lu(&two).unwrap();
        assert!(inv.max_abs_diff(&ComplexMatrix::identity(4).scale(c(0.5, 0.0))) == 0.0);
        let id = ComplexMatrix::<f64>::identity(4);
        assert_eq!(invert_lu(&id).unwrap(), id);
    }

    #[test]
    fn inverse_multiplies_back() {
        let mut rng = RngStream::new(9);
        let mut a = random(&mut rng, 4);
        for i in 0..4 {
            a[(i, i)] += c(6.0, 0.0);
        }
        let inv = invert_lu(&a).unwrap();
        let prod = a.matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-9);
    }

    #[test]
    fn inverse_flags_singular() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 1.0), c(2.0, 2.0)], vec![c(2.0, 2.0), c(4.0, 4.0)]]).unwrap();
        assert!(matches!(invert_lu(&a), Err(Error::Singular { .. })));
        let nearly =
            ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(1.0 + 1e-14, 0.0)]])
                .unwrap();
        assert!(matches!(invert_lu(&nearly), Err(Error::Singular { .. })));
        assert!(matches!(invert_lu(&ComplexMatrix::<f64>::zeros(3, 3)), Err(Error::Singular { .. })));
    }

    #[test]
    fn eigen_reconstructs_hermitian() {
        let mut rng = RngStream::new(21);
        let g = random(&mut rng, 5);
        let h = g.matmul(&g.hermitian()).unwrap();
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let recon = vecs
            .matmul(&ComplexMatrix::diagonal(&vals.iter().map(|&l| c(l, 0.0)).collect::<Vec<_>>()))
            .unwrap()
            .matmul(&vecs.hermitian())
            .unwrap();
        assert!(recon.max_abs_diff(&h) <= 1e-10 * h.max_abs());
        let unitary = vecs.hermitian().matmul(&vecs).unwrap();
        assert!(unitary.max_abs_diff(&ComplexMatrix::identity(5)) <= 1e-12);
    }

    #[test]
    fn sqrt_of_diagonal_and_identity() {
        let id = ComplexMatrix::<f64>::identity(4);
        assert_eq!(psd_sqrt(&id).unwrap(), id);
        let d = ComplexMatrix::diagonal(&[c(4.0, 0.0), c(9.0, 0.0)]);
        let s = psd_sqrt(&d).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::diagonal(&[c(2.0, 0.0), c(3.0, 0.0)])) <= 1e-14);
    }

    #[test]
    fn sqrt_rejects_bad_inputs() {
        let non_herm =
            ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.5, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!(matches!(psd_sqrt(&non_herm), Err(Error::NotHermitian)));
        let indefinite = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(psd_sqrt(&indefinite), Err(Error::Indefinite(_))));
    }

    #[test]
    fn sqrt_of_complex_hermitian() {
        let mut rng = RngStream::new(33);
        let g = random(&mut rng, 4);
        let r = g.matmul(&g.hermitian()).unwrap();
        let s = psd_sqrt(&r).unwrap();
        let back = s.matmul(&s.hermitian()).unwrap();
        assert!(back.max_abs_diff(&r) <= 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let a = ComplexMatrix::<f32>::from_fn(3, 3, |i, j| {
            Complex::new(if i == j { 4.0 } else { 0.5 }, (i as f32 - j as f32) * 0.25)
        });
        let inv = invert_lu(&a).unwrap();
        let prod = a.matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(3)) <= 1e-5);
    }
}
