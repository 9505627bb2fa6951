//! Weighted pool-adjacent-violators for a non-decreasing fit.

use crate::num::Scalar;

/// A run of consecutive inputs pooled to one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block<T> {
    pub start: usize,
    pub len: usize,
    pub weight: T,
    pub value: T,
}

/// Pools adjacent violators until block values are strictly increasing.
/// Equal neighbouring values are pooled as well, so every block value is
/// distinct and the fit can be inverted.
pub fn pava<T: Scalar>(values: &[T], weights: Option<&[T]>) -> Vec<Block<T>> {
    let mut blocks: Vec<Block<T>> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let w = weights.map_or_else(T::one, |ws| ws[i]);
        blocks.push(Block {
            start: i,
            len: 1,
            weight: w,
            value: v,
        });
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].value < blocks[n - 1].value {
                break;
            }
            let last = blocks.pop().unwrap();
            let prev = blocks.last_mut().unwrap();
            let w = prev.weight + last.weight;
            prev.value = (prev.value * prev.weight + last.value * last.weight) / w;
            prev.weight = w;
            prev.len += last.len;
        }
    }
    blocks
}

/// Expands blocks back to one fitted value per input.
pub fn fitted_values<T: Scalar>(blocks: &[Block<T>]) -> Vec<T> {
    blocks
        .iter()
        .flat_map(|b| std::iter::repeat_n(b.value, b.len))
        .collect()
}
