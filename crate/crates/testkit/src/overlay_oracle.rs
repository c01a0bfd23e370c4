use tripplan_core::auxmetrics::AuxDataset;
use tripplan_core::geodata::{great_circle_distance, MapGraph};

/// Every node against every point, no index.
pub fn brute_force_scores(graph: &MapGraph, dataset: &AuxDataset, radius: f64) -> Vec<f64> {
    graph
        .nodes()
        .iter()
        .map(|n| {
            dataset
                .points
                .iter()
                .map(|&p| {
                    let d = great_circle_distance(n.pos, p);
                    if d <= radius {
                        1.0 - d / radius
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}
