//! Smoothed Jensen-Shannon divergence between word distributions.
//!
//! A passage that repeats the document's main words diverges less from it
//! than a passage about something else.

use audiosum::prelude::*;

fn main() -> audiosum::Result<()> {
    let document = "the council voted on the city budget. the budget funds schools, \
                    bridges and traffic lights. after the vote the council adjourned. \
                    in sport, the home team won the match with a late goal.";
    let source = TokenDistribution::from_text(document);
    let params = JsdParams::default();

    let passages = [
        "the council voted on the city budget",
        "the budget funds schools, bridges and traffic lights",
        "the home team won the match with a late goal",
        "rocket launch delayed by solar storm",
    ];
    println!("source: {} tokens, {} distinct", source.total_tokens(), source.vocab_size());
    for p in passages {
        let d = jsd(&source, &TokenDistribution::from_text(p), params)?;
        println!("{d:.5}  {p}");
    }
    println!("{:.5}  (the document itself)", jsd(&source, &source, params)?);
    Ok(())
}
