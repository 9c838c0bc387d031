use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::ffg::FitnessFlowGraph;
use super::LandscapeError;
use crate::fitness::SearchSpaceCache;

/// Nodes with a fraction of optimum below this share one colour.
pub const FLOOD_BELOW: f64 = 0.75;
pub const FLOOD_COLOUR: &str = "#d3d3d3";
const NEAR_COLOUR: (u8, u8, u8) = (0xfd, 0xe7, 0x25);
const OPT_COLOUR: (u8, u8, u8) = (0x44, 0x01, 0x54);
const MINIMUM_SIZE: f64 = 3.0;
const NODE_SIZE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    GraphMl,
    Csv,
}

impl fmt::Display for GraphFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphFormat::Dot => "dot",
            GraphFormat::GraphMl => "graphml",
            GraphFormat::Csv => "csv",
        })
    }
}

impl FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" | "gv" => Ok(GraphFormat::Dot),
            "graphml" => Ok(GraphFormat::GraphMl),
            "csv" => Ok(GraphFormat::Csv),
            _ => Err(format!("unknown graph format `{s}` (expected dot, graphml or csv)")),
        }
    }
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Dot => "dot",
            GraphFormat::GraphMl => "graphml",
            GraphFormat::Csv => "csv",
        }
    }
}

/// Colour for a node with fraction of optimum `fraction`: a gradient over
/// `[FLOOD_BELOW, 1]`, and the flood colour below it.
pub fn node_colour(fraction: f64) -> String {
    if !(fraction >= FLOOD_BELOW) {
        return FLOOD_COLOUR.to_string();
    }
    let t = ((fraction - FLOOD_BELOW) / (1.0 - FLOOD_BELOW)).clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (a as f64 + t * (b as f64 - a as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(NEAR_COLOUR.0, OPT_COLOUR.0), mix(NEAR_COLOUR.1, OPT_COLOUR.1), mix(NEAR_COLOUR.2, OPT_COLOUR.2))
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes `graph` with per-node fitness, fraction of optimum, colour and size.
pub fn export_graph<W: Write>(
    graph: &FitnessFlowGraph,
    cache: &SearchSpaceCache,
    format: GraphFormat,
    mut out: W,
) -> Result<(), LandscapeError> {
    let f_opt = cache.f_opt()?;
    let space = cache.space();
    let node = |u: usize| {
        let f = graph.fitness(u);
        let fraction = f_opt / f;
        let size = if graph.is_local_minimum(u) { MINIMUM_SIZE } else { NODE_SIZE };
        (space.key(&space.configuration(u)), f, fraction, node_colour(fraction), size)
    };
    match format {
        GraphFormat::Dot => {
            writeln!(out, "digraph ffg {{")?;
            writeln!(out, "  node [shape=circle, style=filled, label=\"\"];")?;
            for u in 0..graph.node_count() {
                let (key, f, fraction, colour, size) = node(u);
                writeln!(
                    out,
                    "  n{u} [tooltip=\"{key}\", fitness={f}, fraction={fraction:.6}, fillcolor=\"{colour}\", width={size}, minimum={}];",
                    graph.is_local_minimum(u)
                )?;
            }
            for (u, v) in graph.edges() {
                writeln!(out, "  n{u} -> n{v};")?;
            }
            writeln!(out, "}}")?;
        }
        GraphFormat::GraphMl => {
            writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
            writeln!(out, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
            for (id, name, ty) in [
                ("d0", "config", "string"),
                ("d1", "fitness", "double"),
                ("d2", "fraction", "double"),
                ("d3", "colour", "string"),
                ("d4", "size", "double"),
                ("d5", "minimum", "boolean"),
            ] {
                writeln!(out, r#"  <key id="{id}" for="node" attr.name="{name}" attr.type="{ty}"/>"#)?;
            }
            writeln!(out, r#"  <graph id="ffg" edgedefault="directed">"#)?;
            for u in 0..graph.node_count() {
                let (key, f, fraction, colour, size) = node(u);
                writeln!(
                    out,
                    r#"    <node id="n{u}"><data key="d0">{}</data><data key="d1">{f}</data><data key="d2">{fraction}</data><data key="d3">{colour}</data><data key="d4">{size}</data><data key="d5">{}</data></node>"#,
                    escape_xml(&key),
                    graph.is_local_minimum(u)
                )?;
            }
            for (i, (u, v)) in graph.edges().enumerate() {
                writeln!(out, r#"    <edge id="e{i}" source="n{u}" target="n{v}"/>"#)?;
            }
            writeln!(out, "  </graph>")?;
            writeln!(out, "</graphml>")?;
        }
        GraphFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["source", "target", "source_fitness", "target_fitness"])?;
            for (u, v) in graph.edges() {
                w.write_record([u.to_string(), v.to_string(), graph.fitness(u).to_string(), graph.fitness(v).to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{NeighbourhoodKind, Parameter, ParameterSpace};

    fn two_nodes() -> (FitnessFlowGraph, SearchSpaceCache) {
        let space = ParameterSpace::new(vec![Parameter::new("a", 0..2i64)]).unwrap();
        let c = SearchSpaceCache::from_fitness(space, &[1.0, 2.0]);
        (FitnessFlowGraph::build(&c, NeighbourhoodKind::Hamming).unwrap(), c)
    }

    #[test]
    fn dot_has_one_edge() {
        let (g, c) = two_nodes();
        let mut buf = Vec::new();
        export_graph(&g, &c, GraphFormat::Dot, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("->").count(), 1);
        assert!(text.contains("n1 -> n0;"));
        assert!(text.contains("width=3"));
    }

    #[test]
    fn graphml_and_csv() {
        let (g, c) = two_nodes();
        let mut buf = Vec::new();
        export_graph(&g, &c, GraphFormat::GraphMl, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("<edge ").count(), 1);
        assert_eq!(text.matches("<node ").count(), 2);
        let mut buf = Vec::new();
        export_graph(&g, &c, GraphFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "source,target,source_fitness,target_fitness\n1,0,2,1\n");
    }

    #[test]
    fn colour_rule() {
        assert_eq!(node_colour(0.5), FLOOD_COLOUR);
        assert_eq!(node_colour(0.7499), FLOOD_COLOUR);
        assert_eq!(node_colour(1.0), "#440154");
        assert_eq!(node_colour(0.75), "#fde725");
        assert_ne!(node_colour(0.9), FLOOD_COLOUR);
    }
}
