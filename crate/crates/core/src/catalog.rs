//! Built-in brackets. Indices are 0-based here; `e_1…e_n` in the names and
//! comments are 1-based.

use crate::bracket::Bracket;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub bracket: Bracket<f64>,
}

fn build(n: usize, entries: &[(usize, usize, usize, f64)]) -> Bracket<f64> {
    Bracket::from_entries(n, entries.iter().copied()).expect("catalog entries are valid")
}

pub fn abelian(n: usize) -> Bracket<f64> {
    Bracket::zero(n)
}

/// `[e1, e2] = e3`.
pub fn heisenberg3() -> Bracket<f64> {
    build(3, &[(0, 1, 2, 1.0)])
}

/// `[e1, e2] = [e3, e4] = e5`.
pub fn heisenberg5() -> Bracket<f64> {
    build(5, &[(0, 1, 4, 1.0), (2, 3, 4, 1.0)])
}

/// Free 2-step nilpotent algebra on three generators:
/// `[e1,e2] = e4, [e1,e3] = e5, [e2,e3] = e6`.
pub fn free_two_step3() -> Bracket<f64> {
    build(6, &[(0, 1, 3, 1.0), (0, 2, 4, 1.0), (1, 2, 5, 1.0)])
}

/// `sl(2,R)` in the basis `(h, e, f)`: `[h,e] = 2e, [h,f] = −2f, [e,f] = h`.
pub fn sl2r() -> Bracket<f64> {
    build(3, &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)])
}

/// `so(3)`: `[e1,e2] = e3` and cyclic.
pub fn so3() -> Bracket<f64> {
    build(3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
}

pub fn all() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "abelian2",
            description: "abelian algebra R^2",
            bracket: abelian(2),
        },
        CatalogEntry {
            name: "abelian3",
            description: "abelian algebra R^3",
            bracket: abelian(3),
        },
        CatalogEntry {
            name: "abelian4",
            description: "abelian algebra R^4",
            bracket: abelian(4),
        },
        CatalogEntry {
            name: "heisenberg3",
            description: "3-dimensional Heisenberg algebra",
            bracket: heisenberg3(),
        },
        CatalogEntry {
            name: "heisenberg5",
            description: "5-dimensional Heisenberg algebra",
            bracket: heisenberg5(),
        },
        CatalogEntry {
            name: "free2step3",
            description: "free 2-step nilpotent algebra on 3 generators",
            bracket: free_two_step3(),
        },
        CatalogEntry {
            name: "sl2r",
            description: "sl(2,R) in the basis (h, e, f)",
            bracket: sl2r(),
        },
        CatalogEntry {
            name: "so3",
            description: "so(3)",
            bracket: so3(),
        },
    ]
}

pub fn lookup(name: &str) -> Option<CatalogEntry> {
    all().into_iter().find(|e| e.name == name)
}
