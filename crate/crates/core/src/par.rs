//! Order-preserving map that fans out over rayon when the `parallel`
//! feature is on.

#[cfg(feature = "parallel")]
pub(crate) fn map<I: Sync, T: Send>(items: &[I], parallel: bool, f: impl Fn(&I) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<I: Sync, T: Send>(items: &[I], _parallel: bool, f: impl Fn(&I) -> T + Sync + Send) -> Vec<T> {
    items.iter().map(f).collect()
}
