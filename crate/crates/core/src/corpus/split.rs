use crate::error::{Error, Result};
use crate::numkernel::Rng;

/// Train / validation / test partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Splits `n` items into three parts by largest-remainder rounding.
fn part_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes = [0usize; 3];
    for i in 0..3 {
        sizes[i] = exact[i].floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut left = n - sizes.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Stratified shuffle split. Each class is shuffled and divided on its own,
/// then each part is shuffled again so classes interleave.
pub fn split<T: Clone>(
    items: &[T],
    class_of: impl Fn(&T) -> usize,
    ratios: [f64; 3],
    rng: &mut Rng,
) -> Result<Split<T>> {
    if ratios.iter().any(|&r| r.is_nan() || r <= 0.0)
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::arg(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        )));
    }
    let num_classes = items.iter().map(&class_of).max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, it) in items.iter().enumerate() {
        by_class[class_of(it)].push(i);
    }
    let mut parts: [Vec<T>; 3] = Default::default();
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            return Err(Error::Stratification {
                class,
                count: members.len(),
            });
        }
        rng.shuffle(&mut members);
        let sizes = part_sizes(members.len(), ratios);
        let mut it = members.into_iter();
        for (part, &size) in parts.iter_mut().zip(&sizes) {
            part.extend(it.by_ref().take(size).map(|i| items[i].clone()));
        }
    }
    for part in &mut parts {
        rng.shuffle(part);
    }
    let [train, val, test] = parts;
    Ok(Split { train, val, test })
}
