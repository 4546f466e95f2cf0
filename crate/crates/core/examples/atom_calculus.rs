//! Exact arithmetic on atom sums: norms, products, derivatives and audited pruning.

use barronpde::{AtomMap, Lattice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let l = Lattice::new(vec![1.0, 0.5])?;
    let g = AtomMap::cosine(l.clone(), &[1, 0], 1.0, 0.0)?.add(&AtomMap::cosine(l.clone(), &[1, 2], 0.25, 0.4)?)?;
    let h = AtomMap::cosine(l.clone(), &[0, 1], 0.5, -0.3)?.add(&AtomMap::constant(l, 0.2))?;

    for s in [0.0, 1.0, 2.0] {
        let prod = g.multiply(&h)?.barron_norm(s)?;
        let bound = g.barron_norm(s)? * h.barron_norm(s)?;
        println!("s = {s}: ||gh|| = {prod:.6} <= ||g|| ||h|| = {bound:.6}");
    }

    let dg = g.partial(&[1, 1]);
    println!("||d1 d2 g||_B^0 = {:.6} <= ||g||_B^2 / 2 = {:.6}", dg.barron_norm(0.0)?, 0.5 * g.barron_norm(2.0)?);

    let x = [0.3, -1.1];
    let gh = g.multiply(&h)?.eval(&x)?;
    println!("(gh)(x) = {gh:.12}, g(x) h(x) = {:.12}", g.eval(&x)? * h.eval(&x)?);

    let (pruned, dropped) = g.prune(0.0, 0.6)?;
    println!("pruned {} -> {} atoms, discarded B^0 mass {dropped}", g.len(), pruned.len());
    Ok(())
}
