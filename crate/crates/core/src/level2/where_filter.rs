//! Relational selection over a column-oriented record table.
//!
//! Three parallel phases: map every record to a 0/1 flag, exclusive prefix
//! sum over fixed-block counts, then scatter matching records to their final
//! positions. Output preserves input order.

use crate::error::{Error, Result};
use crate::parallel::{par_map_blocks, SharedSlice};
use crate::rng::CounterRng;

const BLOCK: usize = 1 << 14;

/// Named integer columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    pub n: usize,
    pub names: Vec<String>,
    pub columns: Vec<Vec<i64>>,
}

impl RecordTable {
    pub fn random(n: usize, cols: usize, max_value: i64, rng: &CounterRng) -> RecordTable {
        let names = (0..cols).map(|c| format!("c{c}")).collect();
        let columns = (0..cols)
            .map(|c| {
                let stream = rng.split(c as u64);
                (0..n)
                    .map(|i| (stream.at(i as u64) % max_value.max(1) as u64) as i64)
                    .collect()
            })
            .collect();
        RecordTable { n, names, columns }
    }

    pub fn column(&self, name: &str) -> Option<&[i64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    #[inline]
    fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

/// One column comparison; a predicate is a conjunction of these.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub column: String,
    pub op: CmpOp,
    pub value: i64,
}

impl Condition {
    /// Parses forms like `c0<500`, `c1>=3`, `c2==7`.
    pub fn parse(text: &str) -> Result<Condition> {
        for (token, op) in [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("==", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ] {
            if let Some((col, val)) = text.split_once(token) {
                let value: i64 = val.trim().parse().map_err(|_| {
                    Error::invalid_param("filter", format!("`{val}` is not an integer"))
                })?;
                return Ok(Condition {
                    column: col.trim().to_string(),
                    op,
                    value,
                });
            }
        }
        Err(Error::invalid_param(
            "filter",
            format!("`{text}` is not <column><op><value>"),
        ))
    }

    pub fn negated(&self) -> Condition {
        let op = match self.op {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        };
        Condition {
            column: self.column.clone(),
            op,
            value: self.value,
        }
    }
}

fn resolve<'t>(
    table: &'t RecordTable,
    predicate: &[Condition],
) -> Result<Vec<(&'t [i64], CmpOp, i64)>> {
    predicate
        .iter()
        .map(|cond| {
            let col = table
                .column(&cond.column)
                .ok_or_else(|| Error::InvalidInput(format!("unknown column `{}`", cond.column)))?;
            Ok((col, cond.op, cond.value))
        })
        .collect()
}

/// Flag map + exclusive prefix sum + scatter.
pub fn where_filter(
    table: &RecordTable,
    predicate: &[Condition],
    workers: usize,
) -> Result<RecordTable> {
    let resolved = resolve(table, predicate)?;
    let n = table.n;

    // Phase 1: flags, with per-block match counts.
    let mut flags = vec![0u8; n];
    let counts = {
        let flags_out = SharedSlice::new(&mut flags);
        par_map_blocks(workers, n, BLOCK, |_, range| {
            let mut count = 0usize;
            for i in range {
                let hit = resolved
                    .iter()
                    .all(|(col, op, value)| op.eval(col[i], *value));
                unsafe { flags_out.set(i, hit as u8) };
                count += hit as usize;
            }
            count
        })
    };

    // Phase 2: exclusive prefix sum over block counts.
    let mut offsets = Vec::with_capacity(counts.len());
    let mut total = 0usize;
    for count in &counts {
        offsets.push(total);
        total += count;
    }

    // Phase 3: scatter in original order.
    let mut out_columns: Vec<Vec<i64>> = table.columns.iter().map(|_| vec![0i64; total]).collect();
    {
        let outs: Vec<SharedSlice<'_, i64>> = out_columns
            .iter_mut()
            .map(|c| SharedSlice::new(c))
            .collect();
        par_map_blocks(workers, n, BLOCK, |b, range| {
            let mut pos = offsets[b];
            for i in range {
                if flags[i] == 1 {
                    for (src, dst) in table.columns.iter().zip(&outs) {
                        unsafe { dst.set(pos, src[i]) };
                    }
                    pos += 1;
                }
            }
        });
    }
    Ok(RecordTable {
        n: total,
        names: table.names.clone(),
        columns: out_columns,
    })
}

/// Sequential filter oracle.
pub fn where_filter_sequential(
    table: &RecordTable,
    predicate: &[Condition],
) -> Result<RecordTable> {
    let resolved = resolve(table, predicate)?;
    let keep: Vec<usize> = (0..table.n)
        .filter(|&i| {
            resolved
                .iter()
                .all(|(col, op, value)| op.eval(col[i], *value))
        })
        .collect();
    Ok(RecordTable {
        n: keep.len(),
        names: table.names.clone(),
        columns: table
            .columns
            .iter()
            .map(|col| keep.iter().map(|&i| col[i]).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn condition(column: &str, op: CmpOp, value: i64) -> Condition {
        Condition {
            column: column.to_string(),
            op,
            value,
        }
    }

    #[test]
    fn always_true_predicate_returns_input() {
        let rng = CounterRng::new(1, "where-test");
        let table = RecordTable::random(100, 3, 1000, &rng);
        let out = where_filter(&table, &[condition("c0", CmpOp::Ge, 0)], 2).unwrap();
        assert_eq!(out, table);
    }

    #[test]
    fn always_false_predicate_returns_empty_table() {
        let rng = CounterRng::new(2, "where-test");
        let table = RecordTable::random(100, 2, 1000, &rng);
        let out = where_filter(&table, &[condition("c0", CmpOp::Lt, 0)], 2).unwrap();
        assert_eq!(out.n, 0);
        assert!(out.columns.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn large_random_table_matches_sequential_filter() {
        let rng = CounterRng::new(13, "where-test");
        let table = RecordTable::random(100_000, 4, 1000, &rng);
        let predicate = [condition("c0", CmpOp::Lt, 500)];
        let par = where_filter(&table, &predicate, 4).unwrap();
        let seq = where_filter_sequential(&table, &predicate).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn conjunction_of_conditions() {
        let rng = CounterRng::new(3, "where-test");
        let table = RecordTable::random(10_000, 3, 100, &rng);
        let predicate = [
            condition("c0", CmpOp::Lt, 50),
            condition("c1", CmpOp::Ge, 25),
        ];
        let par = where_filter(&table, &predicate, 3).unwrap();
        let seq = where_filter_sequential(&table, &predicate).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn unknown_column_is_an_error() {
        let rng = CounterRng::new(4, "where-test");
        let table = RecordTable::random(10, 2, 10, &rng);
        assert!(where_filter(&table, &[condition("nope", CmpOp::Lt, 5)], 1).is_err());
    }

    #[test]
    fn condition_parser_handles_all_operators() {
        assert_eq!(
            Condition::parse("c0<500").unwrap(),
            condition("c0", CmpOp::Lt, 500)
        );
        assert_eq!(
            Condition::parse("c1>=25").unwrap(),
            condition("c1", CmpOp::Ge, 25)
        );
        assert_eq!(
            Condition::parse("c2==7").unwrap(),
            condition("c2", CmpOp::Eq, 7)
        );
        assert!(Condition::parse("garbage").is_err());
    }

    proptest! {
        /// Filtering by P and by not-P partitions the input.
        #[test]
        fn predicate_and_negation_partition_the_table(
            n in 0usize..300,
            threshold in 0i64..100,
            seed in 0u64..50,
        ) {
            let rng = CounterRng::new(seed, "where-prop");
            let table = RecordTable::random(n, 2, 100, &rng);
            let cond = condition("c0", CmpOp::Lt, threshold);
            let hits = where_filter(&table, std::slice::from_ref(&cond), 2).unwrap();
            let misses = where_filter(&table, &[cond.negated()], 2).unwrap();
            prop_assert_eq!(hits.n + misses.n, table.n);
            // concatenation is a permutation of the input rows
            let mut combined: Vec<(i64, i64)> = hits.columns[0]
                .iter()
                .zip(&hits.columns[1])
                .chain(misses.columns[0].iter().zip(&misses.columns[1]))
                .map(|(a, b)| (*a, *b))
                .collect();
            let mut original: Vec<(i64, i64)> = table.columns[0]
                .iter()
                .zip(&table.columns[1])
                .map(|(a, b)| (*a, *b))
                .collect();
            combined.sort_unstable();
            original.sort_unstable();
            prop_assert_eq!(combined, original);
        }
    }
}
