//! Builds a roadmap, preprocesses landmarks, and compares guided search
//! against plain Dijkstra on one query.

use lmprm::{
    astar, build_landmark_table, build_prm, dijkstra, landmark_heuristic, select_landmarks,
    CostObjective, Environment,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lmprm::Result<()> {
    let env = Environment::empty(2);
    let graph = build_prm(&env, 5_000, &[CostObjective::length()], 7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ids = select_landmarks(&graph, 32, &mut rng)?;
    let table = build_landmark_table(&graph, "length", &ids)?;

    let start = graph.nearest_vertex(&[-0.4, -0.4])?;
    let goal = graph.nearest_vertex(&[0.4, 0.4])?;
    let bound = landmark_heuristic(&table, &graph, goal)?;
    let guided = astar(&graph, "length", start, goal, &bound)?;
    let plain = dijkstra(&graph, "length", start, goal)?;
    assert_eq!(guided.cost, plain.cost);
    assert!(guided.iterations <= plain.iterations);
    println!(
        "cost {:.6}, iterations {} guided vs {} plain",
        guided.cost, guided.iterations, plain.iterations
    );
    Ok(())
}
