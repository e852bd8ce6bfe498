mod common;

use common::fig_model;
use npkwt::baselines::{sample_size_curve, Baseline, FsstDesign};
use npkwt::export::{
    cost_table_from_str, cost_table_to_string, curves_to_csv, tree_from_str, tree_to_dot,
    tree_to_string, CURVE_HEADER,
};
use npkwt::rational::ratio;
use npkwt::{backward_recursion, evaluate, extract_tree};

#[test]
fn cost_table_round_trip() {
    let table = backward_recursion(&fig_model(9));
    let text = cost_table_to_string(&table);
    let back = cost_table_from_str(&text).unwrap();
    assert_eq!(back.model, table.model);
    assert_eq!(back.levels, table.levels);
    assert_eq!(cost_table_to_string(&back), text);
    let a = extract_tree(&table, 9).unwrap();
    let b = extract_tree(&back, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        evaluate(&a, &a.model.p1).unwrap(),
        evaluate(&b, &b.model.p1).unwrap()
    );
}

#[test]
fn corrupted_cost_tables_are_rejected() {
    let text = cost_table_to_string(&backward_recursion(&fig_model(5)));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let root = doc["states"]
        .as_array()
        .unwrap()
        .iter()
        .position(|s| s["depth"] == 0)
        .unwrap();
    let mut bad = doc.clone();
    bad["states"][root]["rho"]["f0"] = serde_json::json!("1/7");
    assert!(cost_table_from_str(&bad.to_string()).is_err());
    let mut bad = doc.clone();
    bad["states"].as_array_mut().unwrap().remove(root);
    assert!(cost_table_from_str(&bad.to_string()).is_err());
    assert!(cost_table_from_str("{").is_err());
}

#[test]
fn tree_round_trip() {
    let tree = extract_tree(&backward_recursion(&fig_model(7)), 7).unwrap();
    let text = tree_to_string(&tree);
    let back = tree_from_str(&text).unwrap();
    assert_eq!(back, tree);
    assert_eq!(tree_to_string(&back), text);
}

#[test]
fn malformed_trees_are_rejected() {
    let tree = extract_tree(&backward_recursion(&fig_model(4)), 4).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&tree_to_string(&tree)).unwrap();
    let mut bad = doc.clone();
    bad["nodes"][0]["children"] = serde_json::json!([0, 1]);
    assert!(tree_from_str(&bad.to_string()).is_err());
    let mut bad = doc.clone();
    bad["nodes"][1]["p_continue"]["exact"] = serde_json::json!("3/2");
    assert!(tree_from_str(&bad.to_string()).is_err());
    let mut bad = doc;
    bad["nodes"] = serde_json::json!([]);
    assert!(tree_from_str(&bad.to_string()).is_err());
}

#[test]
fn dot_labels() {
    let tree = extract_tree(&backward_recursion(&fig_model(21)), 2).unwrap();
    let dot = tree_to_dot(&tree);
    assert!(dot.starts_with("digraph policy {\n"));
    assert!(dot.ends_with("}\n"));
    let ss = tree.find(&[1, 1]).unwrap();
    assert!(dot.contains(&format!("n{ss} [label=\"1/3\"")));
    assert!(dot.contains("n0 [label=\"3/3\""));
    assert_eq!(dot.matches(" -> ").count(), tree.nodes.len() - 1);
}

#[test]
fn curve_csv_layout() {
    let rows = sample_size_curve(
        &[Baseline::Fsst(FsstDesign::symmetric(3))],
        &ratio(4, 5),
        &ratio(1, 5),
        &[ratio(1, 2)],
    )
    .unwrap();
    let csv = curves_to_csv(&rows);
    assert_eq!(csv, format!("{CURVE_HEADER}\n0.5,3,0.104,0.104,FSST\n"));
}
