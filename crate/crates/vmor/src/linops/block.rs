use std::fmt;
use std::sync::Arc;

use super::LinopError;

/// Block sizes of a product space, with optional `(rows, cols)` metadata for
/// blocks that hold a column-major matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    sizes: Vec<usize>,
    shapes: Vec<Option<(usize, usize)>>,
    offsets: Vec<usize>,
}

impl Layout {
    pub fn new(sizes: Vec<usize>) -> Self {
        let shapes = vec![None; sizes.len()];
        Self::build(sizes, shapes)
    }

    /// Every block is a matrix of the given shape.
    pub fn from_shapes(shapes: &[(usize, usize)]) -> Self {
        let sizes = shapes.iter().map(|&(r, c)| r * c).collect();
        Self::build(sizes, shapes.iter().copied().map(Some).collect())
    }

    pub fn with_shapes(sizes: Vec<usize>, shapes: Vec<Option<(usize, usize)>>) -> Result<Self, LinopError> {
        if shapes.len() != sizes.len() {
            return Err(LinopError::Shape(format!(
                "{} shapes for {} blocks",
                shapes.len(),
                sizes.len()
            )));
        }
        for (i, (s, sh)) in sizes.iter().zip(&shapes).enumerate() {
            if let Some((r, c)) = sh {
                if r * c != *s {
                    return Err(LinopError::Shape(format!("block {i}: {r}x{c} does not hold {s} entries")));
                }
            }
        }
        Ok(Self::build(sizes, shapes))
    }

    fn build(sizes: Vec<usize>, shapes: Vec<Option<(usize, usize)>>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Self { sizes, shapes, offsets }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn shape(&self, i: usize) -> Option<(usize, usize)> {
        self.shapes[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.sizes)
    }
}

/// A point of a product space stored as one contiguous buffer.
///
/// Arithmetic between points panics when layouts differ; use
/// [`BlockPoint::check_layout`] first when the inputs are untrusted.
#[derive(Clone, PartialEq)]
pub struct BlockPoint {
    layout: Arc<Layout>,
    data: Vec<f64>,
}

impl fmt::Debug for BlockPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockPoint")
            .field("layout", &self.layout.sizes)
            .field("data", &self.data)
            .finish()
    }
}

impl BlockPoint {
    pub fn new(layout: Arc<Layout>, data: Vec<f64>) -> Result<Self, LinopError> {
        if data.len() != layout.dim() {
            return Err(LinopError::Dimension { expected: layout.dim(), got: data.len() });
        }
        Ok(Self { layout, data })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        let n = layout.dim();
        Self { layout, data: vec![0.0; n] }
    }

    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Self {
        let layout = Arc::new(Layout::new(blocks.iter().map(Vec::len).collect()));
        let data = blocks.concat();
        Self { layout, data }
    }

    /// Single-block point.
    pub fn from_vec(v: Vec<f64>) -> Self {
        let layout = Arc::new(Layout::new(vec![v.len()]));
        Self { layout, data: v }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.layout.num_blocks()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.layout.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.layout.range(i);
        &mut self.data[r]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_layout(&self, other: &BlockPoint) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn check_layout(&self, other: &BlockPoint) -> Result<(), LinopError> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(LinopError::Layout {
                left: self.layout.to_string(),
                right: other.layout.to_string(),
            })
        }
    }

    fn assert_layout(&self, other: &BlockPoint) {
        if let Err(e) = self.check_layout(other) {
            panic!("{e}");
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.layout.clone())
    }

    /// Same layout, new buffer.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len(), "buffer length does not match layout");
        Self { layout: self.layout.clone(), data }
    }

    pub fn dot(&self, other: &BlockPoint) -> f64 {
        self.assert_layout(other);
        dot(&self.data, &other.data)
    }

    pub fn try_dot(&self, other: &BlockPoint) -> Result<f64, LinopError> {
        self.check_layout(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &BlockPoint) -> Self {
        self.assert_layout(other);
        self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &BlockPoint) -> Self {
        self.assert_layout(other);
        self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.with_data(self.data.iter().map(|x| a * x).collect())
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    /// self += a * x
    pub fn axpy(&mut self, a: f64, x: &BlockPoint) {
        self.assert_layout(x);
        for (s, xi) in self.data.iter_mut().zip(&x.data) {
            *s += a * xi;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
