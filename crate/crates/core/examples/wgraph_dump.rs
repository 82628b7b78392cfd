// Build the weighted graph of a design and inspect it.

use std::collections::BTreeSet;
use std::error::Error;

use piperetime::ir::{parse_design, ValueId};
use piperetime::wgraph::{blackbox_boundaries, build_wgraph, dump_graph, isomorphic, parse_dump};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let d = parse_design(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/designs/sharing.pipe"
    )))?;
    let g = build_wgraph(&d)?;
    let (registers, bits) = g.capacity();
    println!(
        "{} nodes, {} edges, {registers} registers, {bits} bits",
        g.nodes.len(),
        g.edges.len()
    );
    for id in g.node_ids() {
        let n = g.node(id);
        let name = n.origin.as_ref().map_or("-", |v| v.as_str());
        println!("  {:>3} {:<8} {name}", id.index(), n.role.label());
    }

    let text = dump_graph(&g);
    // Dumps drop names and attributes but keep the structure.
    let (back, _) = parse_dump(&text)?;
    assert_eq!(dump_graph(&back), text);
    assert!(isomorphic(&back, &parse_dump(&dump_graph(&back))?.0));

    // Cut one value out of the graph; its inputs become a sink and it becomes a pin.
    let first_comb = g
        .node_ids()
        .find(|&id| matches!(g.node(id).role, piperetime::wgraph::NodeRole::Comb(_)))
        .and_then(|id| g.node(id).origin.clone())
        .ok_or("design has no combinational node")?;
    let cut: BTreeSet<ValueId> = [first_comb.clone()].into();
    let boxed = blackbox_boundaries(&d, &cut)?;
    let h = build_wgraph(&boxed.design)?;
    println!(
        "black-boxing {first_comb}: {} pins, {} sinks",
        h.pins().len(),
        h.sinks().len()
    );
    assert!(h.pins().len() > g.pins().len());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
