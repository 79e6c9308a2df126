//! Writes the static problem as a mixed-integer model in LP text format.
//!
//! Variables per worker `w` over its node set (tasks, `s`, `d`):
//! `x_w_i_j` arc binaries for every ordered pair, `y_w_i` visit binaries
//! and `a_w_i` start times. Nodes are labelled by task id.

use std::fmt::Write;

use crate::model::{big_m, Instance};

/// An exported model with its size.
#[derive(Debug, Clone, PartialEq)]
pub struct MipModel {
    pub lp: String,
    pub binaries: usize,
    pub continuous: usize,
    pub rows: usize,
}

impl MipModel {
    pub fn variables(&self) -> usize {
        self.binaries + self.continuous
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Start,
    Task(usize),
    End,
}

struct Rows {
    text: String,
    count: usize,
}

impl Rows {
    fn push(&mut self, name: &str, terms: &[(f64, String)], sense: &str, rhs: f64) {
        self.count += 1;
        debug_assert!(!terms.is_empty());
        let mut line = format!(" {name}:");
        for (k, (c, v)) in terms.iter().enumerate() {
            if *c < 0.0 {
                line.push_str(" -");
            } else if k > 0 {
                line.push_str(" +");
            }
            let mag = c.abs();
            if mag == 1.0 {
                let _ = write!(line, " {v}");
            } else {
                let _ = write!(line, " {mag} {v}");
            }
        }
        let _ = writeln!(line, " {sense} {rhs}");
        self.text.push_str(&line);
    }
}

/// The full formulation, with big-M from [`big_m`].
pub fn export_mip(inst: &Instance) -> MipModel {
    let m_big = big_m(inst);
    let n = inst.task_count();
    let label = |node: Node| match node {
        Node::Start => "s".to_string(),
        Node::Task(k) => inst.tasks[k].id.to_string(),
        Node::End => "d".to_string(),
    };
    let node_id = |w: usize, node: Node| match node {
        Node::Start => inst.origin_node(w),
        Node::Task(k) => inst.task_node(k),
        Node::End => inst.destination_node(w),
    };
    let duration = |node: Node| match node {
        Node::Task(k) => inst.tasks[k].duration,
        _ => 0.0,
    };

    let mut binaries = Vec::new();
    let mut continuous = Vec::new();
    let mut rows = Rows { text: String::new(), count: 0 };
    let mut objective: Vec<(f64, String)> = Vec::new();

    for (w, wk) in inst.workers.iter().enumerate() {
        let wid = wk.id;
        let nodes: Vec<Node> =
            std::iter::once(Node::Start).chain((0..n).map(Node::Task)).chain(std::iter::once(Node::End)).collect();
        let x = |i: Node, j: Node| format!("x_{wid}_{}_{}", label(i), label(j));
        let y = |k: usize| format!("y_{wid}_{}", label(Node::Task(k)));
        let a = |i: Node| format!("a_{wid}_{}", label(i));
        for &i in &nodes {
            for &j in &nodes {
                if i != j {
                    binaries.push(x(i, j));
                }
            }
        }
        for k in 0..n {
            binaries.push(y(k));
            objective.push((inst.tasks[k].profit, y(k)));
        }
        for &i in &nodes {
            continuous.push(a(i));
        }

        let out_of = |i: Node, targets: &mut dyn Iterator<Item = Node>| -> Vec<(f64, String)> {
            targets.filter(|&j| j != i).map(|j| (1.0, x(i, j))).collect()
        };
        let tasks_then = |extra: Node| (0..n).map(Node::Task).chain(std::iter::once(extra));
        rows.push(&format!("start_flow_{wid}"), &out_of(Node::Start, &mut tasks_then(Node::End)), "=", 1.0);
        let into_end: Vec<_> = tasks_then(Node::Start).map(|i| (1.0, x(i, Node::End))).collect();
        rows.push(&format!("end_flow_{wid}"), &into_end, "=", 1.0);
        let into_start: Vec<_> = tasks_then(Node::End).map(|i| (1.0, x(i, Node::Start))).collect();
        rows.push(&format!("no_into_start_{wid}"), &into_start, "=", 0.0);
        rows.push(&format!("no_out_of_end_{wid}"), &out_of(Node::End, &mut tasks_then(Node::Start)), "=", 0.0);
        for k in 0..n {
            let kn = Node::Task(k);
            let mut inflow: Vec<_> = nodes.iter().filter(|&&i| i != kn).map(|&i| (1.0, x(i, kn))).collect();
            inflow.push((-1.0, y(k)));
            rows.push(&format!("flow_in_{wid}_{}", label(kn)), &inflow, "=", 0.0);
            let mut outflow: Vec<_> = nodes.iter().filter(|&&j| j != kn).map(|&j| (1.0, x(kn, j))).collect();
            outflow.push((-1.0, y(k)));
            rows.push(&format!("flow_out_{wid}_{}", label(kn)), &outflow, "=", 0.0);
        }
        let tm = inst.travel_for(w);
        for &i in nodes.iter().filter(|&&i| i != Node::End) {
            for &j in nodes.iter().filter(|&&j| j != Node::Start && j != i) {
                // a_i + tau_i + t_ij - a_j <= M (1 - x_ij)
                let t_ij = tm.time(node_id(w, i), node_id(w, j));
                let terms = vec![(1.0, a(i)), (-1.0, a(j)), (m_big, x(i, j))];
                rows.push(&format!("time_{wid}_{}_{}", label(i), label(j)), &terms, "<=", m_big - duration(i) - t_ij);
            }
        }
        for k in 0..n {
            let t = &inst.tasks[k];
            let kn = Node::Task(k);
            // a_k >= b_k - M (1 - y_k)  <=>  a_k - M y_k >= b_k - M
            rows.push(&format!("open_{wid}_{}", label(kn)), &[(1.0, a(kn)), (-m_big, y(k))], ">=", t.open - m_big);
            rows.push(
                &format!("release_{wid}_{}", label(kn)),
                &[(1.0, a(kn)), (-m_big, y(k))],
                ">=",
                t.release - m_big,
            );
            // a_k <= e_k + M (1 - y_k)  <=>  a_k + M y_k <= e_k + M
            rows.push(&format!("close_{wid}_{}", label(kn)), &[(1.0, a(kn)), (m_big, y(k))], "<=", t.close + m_big);
        }
        rows.push(&format!("shift_start_{wid}"), &[(1.0, a(Node::Start))], "=", wk.start);
        rows.push(&format!("deadline_{wid}"), &[(1.0, a(Node::End))], "<=", wk.end);
    }
    for k in 0..n {
        let terms: Vec<_> = inst.workers.iter().map(|wk| (1.0, format!("y_{}_{}", wk.id, inst.tasks[k].id))).collect();
        if !terms.is_empty() {
            rows.push(&format!("once_{}", inst.tasks[k].id), &terms, "<=", 1.0);
        }
    }

    let mut lp = String::new();
    let _ = writeln!(lp, "\\ static team orienteering with time windows, big-M = {m_big}");
    lp.push_str("Maximize\n obj:");
    if objective.is_empty() {
        match continuous.first() {
            Some(v) => {
                let _ = write!(lp, " 0 {v}");
            }
            None => lp.push_str(" 0"),
        }
    }
    for (k, (c, v)) in objective.iter().enumerate() {
        let sep = if k == 0 { "" } else { " +" };
        let _ = write!(lp, "{sep} {c} {v}");
    }
    lp.push_str("\nSubject To\n");
    lp.push_str(&rows.text);
    lp.push_str("Bounds\n");
    for v in &continuous {
        let _ = writeln!(lp, " {v} >= 0");
    }
    lp.push_str("Binaries\n");
    for v in &binaries {
        let _ = writeln!(lp, " {v}");
    }
    lp.push_str("End\n");
    MipModel { lp, binaries: binaries.len(), continuous: continuous.len(), rows: rows.count }
}
