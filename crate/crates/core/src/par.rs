//! Data-parallel helpers. With the `parallel` feature these run on the ambient
//! rayon pool; without it they fall back to plain iterators. Results are always
//! returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_range<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..len).map(f).collect()
}

/// Fallible map; the error reported is the one at the lowest input index.
pub fn try_map<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        let v: Vec<u32> = (0..1000).collect();
        assert_eq!(
            super::map(&v, |x| x * 2),
            v.iter().map(|x| x * 2).collect::<Vec<_>>()
        );
        assert_eq!(super::map_range(5, |i| i), vec![0, 1, 2, 3, 4]);
        let r: Result<Vec<u32>, u32> =
            super::try_map(&v, |&x| if x % 300 == 299 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(299));
    }
}
