//! Scores factor triples with the level-sum rule base, shows the fired rules
//! and compares the default operators with min/max.
//!
//! cargo run --example fuzzy_score [reliability relevance engagement]

use ipbac::fuzzy::{
    activations, infer, score_factors, FuzzyFactors, InferenceOperators, Memberships, RuleBase,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let product = RuleBase::level_sum_default();
    let classic = RuleBase::level_sum(InferenceOperators::classic());

    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let triples: Vec<[f64; 3]> = match args.as_slice() {
        [r, c, e] => vec![[*r, *c, *e]],
        [] => vec![
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.5],
            [1.0, 1.0, 1.0],
            [0.75, 0.1, 0.3],
            [0.3, 0.9, 0.05],
        ],
        _ => return Err("expected three values in [0, 1] or none".into()),
    };

    println!(
        "{:>6} {:>6} {:>6}   {:>8} {:>8}",
        "rel", "relev", "eng", "product", "min/max"
    );
    for [r, c, e] in &triples {
        let factors = FuzzyFactors::new(*r, *c, *e).ok_or("factors must lie in [0, 1]")?;
        let p = score_factors(&factors, &product)?.value();
        let m = score_factors(&factors, &classic)?.value();
        println!("{r:>6.3} {c:>6.3} {e:>6.3}   {p:>8.4} {m:>8.4}");
    }

    let [r, c, e] = triples[triples.len() - 1];
    let factors = FuzzyFactors::new(r, c, e).ok_or("factors must lie in [0, 1]")?;
    let memberships = Memberships::fuzzify(&product, &factors.named())?;
    println!("\nrules fired for ({r}, {c}, {e}), product conjunction:");
    for rule in product.rules() {
        let strength: f64 = rule
            .antecedent
            .iter()
            .map(|(var, term)| {
                let v = product
                    .inputs()
                    .iter()
                    .find(|v| &v.name == var)
                    .expect("declared input");
                let value = factors
                    .named()
                    .iter()
                    .find(|(n, _)| n == var)
                    .expect("named")
                    .1;
                v.terms[v.term_index(term).expect("declared term")]
                    .function
                    .degree(value)
            })
            .product();
        if strength > 0.0 {
            println!("  {strength:.4}  {}", rule.to_line());
        }
    }
    println!("output term activations (bounded sum):");
    for (term, w) in product
        .output()
        .terms
        .iter()
        .zip(activations(&memberships, &product))
    {
        println!("  {:<13} {w:.4}", term.name);
    }
    let curve = infer(&memberships, &product)?;
    println!("aggregate curve breakpoints:");
    for (x, y) in curve.points() {
        println!("  {x:.4} {y:.4}");
    }
    Ok(())
}
