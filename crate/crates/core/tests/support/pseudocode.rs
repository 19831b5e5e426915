//! Literal reading of the service-matching pseudocode:
//!
//! ```text
//! as := AS[0]
//! for each pair of services (s1, s2) in AS do
//!     if sim1 >= t1 and abs(sim1 - sim2) <= delta then as := max(as.similarity, sim1, sim2)
//!     else if sim2 >= t1 then as := s2
//!     else if sim1 >= t2 or sim2 >= t2 then as := user_disambiguate(s1, s2)
//!     else as := nil
//! ```
//!
//! Every ordered pair of distinct services is visited. A lone service is
//! paired with an absent partner whose similarity is minus infinity, in both
//! positions. Pair verdicts combine as: any selection wins (the highest
//! selected similarity, first index on ties); otherwise any disambiguation
//! between two real services; otherwise nil.

#![allow(dead_code)]

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Select(usize),
    /// Indices of the services with similarity >= t2 that took part in a
    /// disambiguating pair, highest similarity first.
    Disambiguate(Vec<usize>),
    Nil,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Select(_) => "Selected",
            Verdict::Disambiguate(_) => "NeedsDisambiguation",
            Verdict::Nil => "NoMatch",
        }
    }
}

pub fn interpret(sims: &[f64], t1: f64, t2: f64, delta: f64) -> Verdict {
    let slots: Vec<Option<usize>> = if sims.len() == 1 {
        vec![Some(0), None]
    } else {
        (0..sims.len()).map(Some).collect()
    };
    let sim = |s: Option<usize>| s.map_or(f64::NEG_INFINITY, |i| sims[i]);

    let mut selected: Vec<usize> = Vec::new();
    let mut asked: BTreeSet<usize> = BTreeSet::new();
    let mut disambiguate = false;
    for (ai, &a) in slots.iter().enumerate() {
        for (bi, &b) in slots.iter().enumerate() {
            if ai == bi {
                continue;
            }
            let (sim1, sim2) = (sim(a), sim(b));
            if sim1 >= t1 && (sim1 - sim2).abs() <= delta {
                let winner = if sim1 >= sim2 { a } else { b };
                selected.extend(winner);
            } else if sim2 >= t1 {
                selected.extend(b);
            } else if sim1 >= t2 || sim2 >= t2 {
                if let (Some(x), Some(y)) = (a, b) {
                    disambiguate = true;
                    asked.extend([x, y].into_iter().filter(|&i| sims[i] >= t2));
                }
            }
        }
    }

    if let Some(&best) = selected
        .iter()
        .min_by(|&&x, &&y| sims[y].partial_cmp(&sims[x]).unwrap().then(x.cmp(&y)))
    {
        return Verdict::Select(best);
    }
    if disambiguate {
        let mut offered: Vec<usize> = asked.into_iter().collect();
        offered.sort_by(|&x, &y| sims[y].partial_cmp(&sims[x]).unwrap().then(x.cmp(&y)));
        return Verdict::Disambiguate(offered);
    }
    Verdict::Nil
}
