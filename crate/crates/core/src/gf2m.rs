//! Arithmetic over GF(2^m) and the linear algebra built on it.
//!
//! Elements are stored as polynomial-basis bit patterns: bit `t` of the value
//! is the coefficient of `x^t`. Addition is XOR. Multiplication is a
//! carry-less shift-and-XOR product reduced by the field polynomial, with
//! log/antilog tables as an accelerator for `m <= 12`.
//!
//! [`FieldMatrix`] is the generic dense matrix used for the frame-level
//! system; [`Gf2Matrix`] is the bit-packed binary matrix used for slot-level
//! indicator matrices and parity-check matrices. Both compute rank by Gaussian
//! elimination and must agree on binary inputs.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 16;

/// Largest degree for which log/antilog tables are built.
const TABLE_MAX_DEGREE: u32 = 12;

/// An element of GF(2^m). The field it belongs to is carried separately by
/// [`FieldSpec`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug)]
struct LogTables {
    // exp has 2*(q-1) entries so that log(a)+log(b) never needs a modulo.
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// Description of GF(2^m): the extension degree and an irreducible reduction
/// polynomial (bit mask including the `x^m` term).
#[derive(Clone)]
pub struct FieldSpec {
    degree: u32,
    polynomial: u32,
    tables: Option<Arc<LogTables>>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("degree", &self.degree)
            .field("polynomial", &format_args!("{:#x}", self.polynomial))
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.polynomial == other.polynomial
    }
}

impl Eq for FieldSpec {}

/// Remainder of `a` divided by `b` in GF(2)[x].
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = 63 - b.leading_zeros();
    while a != 0 && 63 - a.leading_zeros() >= db {
        let shift = (63 - a.leading_zeros()) - db;
        a ^= b << shift;
    }
    a
}

/// Trial division of a degree-`m` polynomial by every polynomial of degree
/// `1..=m/2`.
pub fn is_irreducible(polynomial: u32, degree: u32) -> bool {
    if degree == 0 || degree > 31 {
        return false;
    }
    if polynomial >> degree != 1 {
        return false;
    }
    let p = polynomial as u64;
    for d in 1..=degree / 2 {
        for divisor in (1u64 << d)..(1u64 << (d + 1)) {
            if poly_rem(p, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// The lexicographically smallest irreducible polynomial of the given degree.
pub fn default_polynomial(degree: u32) -> Result<u32> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::InvalidField(format!("extension degree {degree} outside 1..={MAX_DEGREE}")));
    }
    ((1u32 << degree)..(1u32 << (degree + 1)))
        .find(|&p| is_irreducible(p, degree))
        .ok_or_else(|| Error::InvalidField(format!("no irreducible polynomial of degree {degree}")))
}

impl FieldSpec {
    /// GF(2^m) with the default (smallest irreducible) polynomial.
    pub fn new(degree: u32) -> Result<Self> {
        let poly = default_polynomial(degree)?;
        Self::with_polynomial(degree, poly)
    }

    /// GF(2^m) with an explicit reduction polynomial, checked for
    /// irreducibility.
    pub fn with_polynomial(degree: u32, polynomial: u32) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidField(format!("extension degree {degree} outside 1..={MAX_DEGREE}")));
        }
        if !is_irreducible(polynomial, degree) {
            return Err(Error::InvalidField(format!(
                "polynomial {polynomial:#x} is not an irreducible degree-{degree} polynomial"
            )));
        }
        let mut spec = FieldSpec { degree, polynomial, tables: None };
        if degree <= TABLE_MAX_DEGREE {
            spec.tables = Some(Arc::new(spec.build_tables()));
        }
        Ok(spec)
    }

    /// Same field without the lookup tables; every product goes through the
    /// shift-and-XOR path.
    pub fn without_tables(&self) -> Self {
        FieldSpec { degree: self.degree, polynomial: self.polynomial, tables: None }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn polynomial(&self) -> u32 {
        self.polynomial
    }

    /// Field order q = 2^m.
    pub fn order(&self) -> u32 {
        1 << self.degree
    }

    pub fn has_tables(&self) -> bool {
        self.tables.is_some()
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        (a.0 as u32) < self.order()
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value < self.order() {
            Ok(FieldElement(value as u16))
        } else {
            Err(Error::InvalidField(format!("value {value} not in GF(2^{})", self.degree)))
        }
    }

    /// All elements in increasing integer order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.order()).map(|v| FieldElement(v as u16))
    }

    /// All nonzero elements in increasing integer order.
    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> {
        (1..self.order()).map(|v| FieldElement(v as u16))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    /// Carry-less multiply with reduction after every shift.
    pub fn mul_direct(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let top = 1u32 << self.degree;
        let mut a = a.0 as u32;
        let mut b = b.0 as u32;
        let mut acc = 0u32;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.polynomial;
            }
        }
        FieldElement(acc as u16)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.tables {
            Some(t) => {
                if a.0 == 0 || b.0 == 0 {
                    FieldElement::ZERO
                } else {
                    let idx = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
                    FieldElement(t.exp[idx])
                }
            }
            None => self.mul_direct(a, b),
        }
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::Domain("zero has no multiplicative inverse".into()));
        }
        if let Some(t) = &self.tables {
            let n = self.order() as usize - 1;
            let l = t.log[a.0 as usize] as usize;
            return Ok(FieldElement(t.exp[(n - l) % n]));
        }
        // a^(q-2) by square-and-multiply.
        let mut exponent = self.order() - 2;
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = self.mul_direct(acc, base);
            }
            base = self.mul_direct(base, base);
            exponent >>= 1;
        }
        Ok(acc)
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Multiplicative order of a nonzero element, by repeated multiplication.
    fn order_of(&self, g: FieldElement) -> u32 {
        let mut x = g;
        let mut k = 1;
        while x != FieldElement::ONE {
            x = self.mul_direct(x, g);
            k += 1;
        }
        k
    }

    fn build_tables(&self) -> LogTables {
        let n = self.order() - 1;
        // x is not primitive for every irreducible polynomial, so search.
        let generator = (if n == 1 { 1 } else { 2 }..=n)
            .map(|v| FieldElement(v as u16))
            .find(|&g| self.order_of(g) == n)
            .expect("the multiplicative group of a finite field is cyclic");
        let mut exp = vec![0u16; 2 * n as usize];
        let mut log = vec![0u16; self.order() as usize];
        let mut x = FieldElement::ONE;
        for i in 0..n as usize {
            exp[i] = x.0;
            exp[i + n as usize] = x.0;
            log[x.0 as usize] = i as u16;
            x = self.mul_direct(x, generator);
        }
        LogTables { exp, log }
    }
}

// ---------------------------------------------------------------------------
// Dense matrices over GF(2^m)
// ---------------------------------------------------------------------------

/// Row-major dense matrix over a [`FieldSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
    field: FieldSpec,
}

impl FieldMatrix {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        FieldMatrix { rows, cols, entries: vec![FieldElement::ZERO; rows * cols], field: field.clone() }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    /// Build from integer rows; every row must have `cols` entries valid in
    /// the field.
    pub fn from_rows<R: AsRef<[u32]>>(field: &FieldSpec, cols: usize, rows: &[R]) -> Result<Self> {
        let mut m = Self::zeros(field, 0, cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row has {} entries, expected {cols}",
                    row.len()
                )));
            }
            let elems = row.iter().map(|&v| field.element(v)).collect::<Result<Vec<_>>>()?;
            m.push_row(&elems)?;
        }
        Ok(m)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        debug_assert!(self.field.contains(v));
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[FieldElement]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "row has {} entries, expected {}",
                row.len(),
                self.cols
            )));
        }
        if let Some(bad) = row.iter().find(|v| !self.field.contains(**v)) {
            return Err(Error::InvalidField(format!("entry {bad} outside the field")));
        }
        self.entries.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Keep only the listed rows, in the given order.
    pub fn select_rows(&self, which: &[usize]) -> Self {
        let mut out = Self::zeros(&self.field, 0, self.cols);
        for &r in which {
            out.entries.extend_from_slice(self.row(r));
            out.rows += 1;
        }
        out
    }

    /// Rank by Gaussian elimination over the generic field path.
    pub fn rank_generic(&self) -> usize {
        let mut work = self.clone();
        work.reduce(None).len()
    }

    /// Rank; binary matrices take the bit-packed path.
    pub fn rank(&self) -> usize {
        if self.field.degree() == 1 {
            Gf2Matrix::from_field_matrix(self).rank()
        } else {
            self.rank_generic()
        }
    }

    /// In-place reduced row echelon form. Row operations are mirrored on
    /// `rhs` (one payload vector per row). Returns `(row, pivot column)` for
    /// each pivot, rows in order.
    fn reduce(&mut self, mut rhs: Option<&mut Vec<Vec<FieldElement>>>) -> Vec<(usize, usize)> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.entries.swap(p * self.cols + j, r * self.cols + j);
                }
                if let Some(b) = rhs.as_deref_mut() {
                    b.swap(p, r);
                }
            }
            let inv = f.inv(self.get(r, c)).expect("pivot is nonzero");
            if inv != FieldElement::ONE {
                for j in c..self.cols {
                    let v = f.mul(self.get(r, j), inv);
                    self.set(r, j, v);
                }
                if let Some(b) = rhs.as_deref_mut() {
                    for v in b[r].iter_mut() {
                        *v = f.mul(*v, inv);
                    }
                }
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = f.add(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
                if let Some(b) = rhs.as_deref_mut() {
                    let (src, dst) = if i < r {
                        let (lo, hi) = b.split_at_mut(r);
                        (&hi[0], &mut lo[i])
                    } else {
                        let (lo, hi) = b.split_at_mut(i);
                        (&lo[r], &mut hi[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d = f.add(*d, f.mul(factor, *s));
                    }
                }
            }
            pivots.push((r, c));
            r += 1;
        }
        pivots
    }
}

/// Rank of `m` over its field.
pub fn mat_rank(m: &FieldMatrix) -> usize {
    m.rank()
}

/// Outcome of [`gauss_solve_partial`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSolution {
    /// Unknown index to its uniquely determined value.
    pub values: BTreeMap<usize, Vec<FieldElement>>,
    pub rank: usize,
    /// A zero row of the reduced system carried a nonzero right-hand side.
    pub inconsistent: bool,
}

impl PartialSolution {
    pub fn is_complete(&self, unknowns: usize) -> bool {
        self.values.len() == unknowns
    }
}

/// Solve `A x = b` for every unknown whose value is uniquely determined.
///
/// `a` has one row per equation and one column per unknown; `b[r]` is the
/// payload (a vector of field symbols) of row `r`. An unknown is determined
/// exactly when its pivot row in the reduced echelon form has no other
/// nonzero entry.
pub fn gauss_solve_partial(a: &FieldMatrix, b: &[Vec<FieldElement>]) -> Result<PartialSolution> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} equations but {} payload rows", a.rows(), b.len())));
    }
    let width = b.first().map(Vec::len).unwrap_or(0);
    if b.iter().any(|row| row.len() != width) {
        return Err(Error::DimensionMismatch("payload rows differ in length".into()));
    }
    let mut work = a.clone();
    let mut rhs = b.to_vec();
    let pivots = work.reduce(Some(&mut rhs));
    let rank = pivots.len();
    let inconsistent = (rank..work.rows()).any(|r| rhs[r].iter().any(|v| !v.is_zero()));
    let mut values = BTreeMap::new();
    for &(r, c) in &pivots {
        let alone = (0..work.cols()).all(|j| j == c || work.get(r, j).is_zero());
        if alone {
            values.insert(c, rhs[r].clone());
        }
    }
    Ok(PartialSolution { values, rank, inconsistent })
}

/// Probability that a uniformly random `n x (n + delta)` matrix over GF(q)
/// has rank `n`: the product of `1 - q^(i-1) / q^(n+delta)` for `i = 1..=n`.
pub fn full_rank_probability(n: usize, delta: usize, q: f64) -> f64 {
    let width = (n + delta) as i32;
    (1..=n as i32).map(|i| 1.0 - q.powi(i - 1 - width)).product()
}

// ---------------------------------------------------------------------------
// Bit-packed binary matrices
// ---------------------------------------------------------------------------

/// Binary matrix with each row packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    cols: usize,
    words: usize,
    data: Vec<Vec<u64>>,
}

impl Gf2Matrix {
    pub fn new(cols: usize) -> Self {
        Gf2Matrix { cols, words: cols.div_ceil(64).max(1), data: Vec::new() }
    }

    pub fn from_field_matrix(m: &FieldMatrix) -> Self {
        assert_eq!(m.field().degree(), 1, "bit-packed path is for GF(2) only");
        let mut out = Self::new(m.cols());
        for r in 0..m.rows() {
            let bits: Vec<bool> = m.row(r).iter().map(|v| v.0 == 1).collect();
            out.push_bits(&bits);
        }
        out
    }

    pub fn to_field_matrix(&self) -> FieldMatrix {
        let f = FieldSpec::new(1).expect("GF(2) always exists");
        let mut m = FieldMatrix::zeros(&f, 0, self.cols);
        for r in 0..self.rows() {
            let row: Vec<FieldElement> =
                (0..self.cols).map(|c| FieldElement(self.get(r, c) as u16)).collect();
            m.push_row(&row).expect("width matches");
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.data.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn push_bits(&mut self, bits: &[bool]) {
        assert_eq!(bits.len(), self.cols);
        let mut row = vec![0u64; self.words];
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            row[i / 64] |= 1 << (i % 64);
        }
        self.data.push(row);
    }

    /// Push a row given as a bit mask (only for `cols <= 64`).
    pub fn push_mask(&mut self, mask: u64) {
        assert!(self.cols <= 64);
        let valid = if self.cols == 64 { u64::MAX } else { (1u64 << self.cols) - 1 };
        assert_eq!(mask & !valid, 0, "mask wider than the matrix");
        let mut row = vec![0u64; self.words];
        row[0] = mask;
        self.data.push(row);
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        if bit {
            self.data[r][c / 64] |= 1 << (c % 64);
        } else {
            self.data[r][c / 64] &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r][c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r]
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let (w, bit) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row[w] & bit != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }
}

/// Incremental GF(2) row space over at most 64 columns, kept in echelon form.
/// Used to test whether a subset indicator is already implied by decoded rows.
#[derive(Debug, Clone, Default)]
pub struct Gf2Span {
    // Basis vectors keyed by their highest set bit.
    basis: Vec<u64>,
}

impl Gf2Span {
    pub fn new() -> Self {
        Self::default()
    }

    fn reduce(&self, mut v: u64) -> u64 {
        for &b in &self.basis {
            let top = 63 - b.leading_zeros();
            if (v >> top) & 1 == 1 {
                v ^= b;
            }
        }
        v
    }

    pub fn contains(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }

    /// Insert `v`; returns whether it was independent of the current span.
    pub fn insert(&mut self, v: u64) -> bool {
        let r = self.reduce(v);
        if r == 0 {
            return false;
        }
        self.basis.push(r);
        self.basis.sort_unstable_by(|a, b| b.cmp(a));
        true
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}
