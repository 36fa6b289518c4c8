use std::fmt::Write;

use crate::fsc::Fsc;
use crate::model::{ActionId, DetPomdp, Observation};

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

fn render(
    fsc: &Fsc,
    action: &dyn Fn(ActionId) -> String,
    observation: &dyn Fn(Observation) -> String,
) -> String {
    let mut out = String::from("digraph fsc {\n  rankdir=LR;\n  node [shape=box];\n");
    for (v, node) in fsc.nodes.iter().enumerate() {
        let style = if v == fsc.start { ", peripheries=2" } else { "" };
        writeln!(out, "  n{v} [label=\"{}\"{style}];", escape(&action(node.action))).unwrap();
    }
    for (v, node) in fsc.nodes.iter().enumerate() {
        for (&o, &t) in &node.edges {
            writeln!(out, "  n{v} -> n{t} [label=\"{}\"];", escape(&observation(o))).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// Graphviz rendering with raw action indices and observation tokens.
pub fn to_dot(fsc: &Fsc) -> String {
    render(fsc, &|a| a.to_string(), &|o| o.to_string())
}

/// Graphviz rendering using the model's action and observation labels.
pub fn to_dot_labelled(fsc: &Fsc, model: &dyn DetPomdp) -> String {
    render(
        fsc,
        &|a| model.action_label(a),
        &|o| model.observation_label(o),
    )
}
