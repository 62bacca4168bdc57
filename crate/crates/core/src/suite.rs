//! The standard benchmark roster: 25 benchmarks across levels 0-2.

use crate::dnn::bench::{
    ActivationBenchmark, BatchnormBenchmark, CompositeBenchmark, ConnectedBenchmark,
    ConvolutionBenchmark, DropoutBenchmark, LrnBenchmark, PoolingBenchmark, SoftmaxBenchmark,
};
use crate::error::Result;
use crate::harness::Registry;
use crate::level0::bench::{BusSpeedBenchmark, DeviceMemBenchmark, MaxFlopsBenchmark};
use crate::level0::buscopy::CopyDirection;
use crate::level1::bench::{
    BfsBenchmark, GemmBenchmark, GupsBenchmark, PathfinderBenchmark, SortBenchmark,
};
use crate::level2::bench::{
    Dwt2dBenchmark, KmeansBenchmark, LavamdBenchmark, MandelbrotBenchmark, NwBenchmark,
    SradBenchmark, WhereBenchmark,
};

/// Registers the complete suite.
pub fn standard_registry() -> Result<Registry> {
    let mut registry = Registry::new();
    // level 0
    registry.register(Box::new(BusSpeedBenchmark {
        direction: CopyDirection::AToB,
    }))?;
    registry.register(Box::new(BusSpeedBenchmark {
        direction: CopyDirection::BToA,
    }))?;
    registry.register(Box::new(DeviceMemBenchmark))?;
    registry.register(Box::new(MaxFlopsBenchmark))?;
    // level 1
    registry.register(Box::new(GupsBenchmark))?;
    registry.register(Box::new(BfsBenchmark))?;
    registry.register(Box::new(GemmBenchmark))?;
    registry.register(Box::new(PathfinderBenchmark))?;
    registry.register(Box::new(SortBenchmark))?;
    // level 2 applications
    registry.register(Box::new(KmeansBenchmark))?;
    registry.register(Box::new(LavamdBenchmark))?;
    registry.register(Box::new(MandelbrotBenchmark))?;
    registry.register(Box::new(NwBenchmark))?;
    registry.register(Box::new(SradBenchmark))?;
    registry.register(Box::new(WhereBenchmark))?;
    registry.register(Box::new(Dwt2dBenchmark))?;
    // level 2 DNN kernels
    registry.register(Box::new(ActivationBenchmark))?;
    registry.register(Box::new(PoolingBenchmark))?;
    registry.register(Box::new(BatchnormBenchmark))?;
    registry.register(Box::new(ConnectedBenchmark))?;
    registry.register(Box::new(ConvolutionBenchmark))?;
    registry.register(Box::new(DropoutBenchmark))?;
    registry.register(Box::new(SoftmaxBenchmark))?;
    registry.register(Box::new(LrnBenchmark))?;
    registry.register(Box::new(CompositeBenchmark))?;
    Ok(registry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_has_twenty_five_benchmarks() {
        // 4 level-0 + 5 level-1 + 7 level-2 + 8 DNN layers + 1 composite
        let registry = standard_registry().unwrap();
        assert_eq!(registry.len(), 25);
    }

    #[test]
    fn listing_is_sorted_by_level_then_name() {
        let registry = standard_registry().unwrap();
        let list = registry.list();
        for pair in list.windows(2) {
            assert!(
                (pair[0].level, &pair[0].name) <= (pair[1].level, &pair[1].name),
                "{}/{} before {}/{}",
                pair[0].level,
                pair[0].name,
                pair[1].level,
                pair[1].name
            );
        }
        assert_eq!(list.iter().filter(|d| d.level == 0).count(), 4);
        assert_eq!(list.iter().filter(|d| d.level == 1).count(), 5);
        assert_eq!(list.iter().filter(|d| d.level == 2).count(), 16);
    }

    #[test]
    fn every_descriptor_validates_and_has_four_presets() {
        let registry = standard_registry().unwrap();
        for desc in registry.list() {
            for preset in &desc.presets {
                assert!(!preset.is_empty(), "{} has an empty preset", desc.name);
            }
            assert!(!desc.primary_metric.is_empty());
        }
    }
}
