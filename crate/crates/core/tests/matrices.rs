// The three rule-by-axiom property matrices must match their pinned
// expectations cell by cell, with every blank backed by a witness.

use std::time::Instant;

use ttclab_core::rules::{property_matrix, Mark};

fn check_table(table: u8, budget_secs: u64) {
    let start = Instant::now();
    let matrix = property_matrix(table).unwrap();
    let elapsed = start.elapsed();
    for line in matrix.diff() {
        eprintln!("table {table}: {line}");
    }
    assert!(matrix.matches(), "table {table} does not reproduce");
    for row in &matrix.rows {
        for cell in &row.cells {
            match cell.computed {
                Mark::Blank => assert!(
                    cell.witness.is_some(),
                    "table {table} {} / {}: blank without witness",
                    row.label,
                    cell.axiom
                ),
                Mark::Check | Mark::Dash => assert!(cell.witness.is_none()),
            }
        }
    }
    assert!(
        elapsed.as_secs() < budget_secs,
        "table {table} took {elapsed:?}, budget {budget_secs}s"
    );
}

#[test]
fn table_one_reproduces() {
    check_table(1, 30);
}

#[test]
fn table_two_reproduces() {
    check_table(2, 60);
}

#[test]
fn table_three_reproduces() {
    check_table(3, 60);
}
