//! File formats, experiment orchestration and the command-line front end for the
//! `causaldyn-core` generators.

pub mod dataio;
pub mod generate;
pub mod pipeline;

use causaldyn_core::systems::Catalog;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub dt: f64,
    pub burn_in: usize,
    pub initial_condition: [f64; 3],
    /// `sparsity[k][i]`: variable `k` enters the equation of variable `i`.
    pub sparsity: [[bool; 3]; 3],
}

pub fn catalog_entries(catalog: &Catalog) -> Vec<CatalogEntry> {
    catalog
        .systems()
        .iter()
        .map(|s| CatalogEntry {
            name: s.name,
            params: s.param_names.iter().copied().zip(s.params.iter().copied()).collect(),
            dt: s.dt,
            burn_in: s.burn_in,
            initial_condition: s.ic0,
            sparsity: s.sparsity,
        })
        .collect()
}
