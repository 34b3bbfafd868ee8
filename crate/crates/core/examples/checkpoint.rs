//! Interrupting a propagation, checkpointing it, and resuming bit for bit.

use std::sync::Arc;

use sbheom::decomp::{BasisFunction, CorrelationFit, FitPart};
use sbheom::heom::{
    enumerate_space, propagate, read_checkpoint, write_checkpoint, AdoState, Block,
    CheckpointHeader, Generator, Rescaling, Span, SystemSpec, DEFAULT_ADO_BUDGET,
};

fn main() -> sbheom::Result<()> {
    use BasisFunction::*;
    let fit = CorrelationFit::from_parts(
        FitPart::new(
            vec![Decay { rate: 1.0 }, Decay { rate: 0.2 }],
            vec![0.05, 0.01],
        )?,
        FitPart::new(vec![Decay { rate: 0.7 }], vec![-0.03])?,
        50.0,
    );
    let space = Arc::new(enumerate_space(
        fit.n_real(),
        fit.n_imag(),
        5,
        DEFAULT_ADO_BUDGET,
    )?);
    let gen = Generator::new(
        space.clone(),
        &fit,
        SystemSpec::new(0.5),
        Rescaling::default(),
    )?;
    let start = AdoState::product(space.clone(), Block::plus_state());

    let straight = propagate(start.clone(), &gen, &Span::new(20.0, 0.01, 100))?;

    let half = propagate(start, &gen, &Span::new(10.0, 0.01, 100))?;
    let mut bytes = Vec::new();
    write_checkpoint(
        &mut bytes,
        &CheckpointHeader::for_state(&half.state, &fit.hash(), 10.0, false),
        &half.state,
    )?;
    println!("checkpoint: {} bytes for {} ADOs", bytes.len(), space.len());
    let (header, state) = read_checkpoint(bytes.as_slice(), space)?;
    let rest = propagate(state, &gen, &Span::new(10.0, 0.01, 100))?;

    let a = straight.state.project_rdm();
    let b = rest.state.project_rdm();
    println!(
        "resumed at t = {}: final <sigma_z> {} vs {}, identical {}",
        header.time,
        a.expect_z().re,
        b.expect_z().re,
        a == b
    );
    Ok(())
}
