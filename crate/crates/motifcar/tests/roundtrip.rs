use motifcar::{store, tu};
use motifcar_core::graph::{Role, Split};
use motifcar_core::{Graph, LabeledDataset};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (1usize..9).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = Graph::empty(n);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    g.set_edge(i, j, bits[k]);
                    k += 1;
                }
            }
            g
        })
    })
}

fn dataset_strategy() -> impl Strategy<Value = LabeledDataset> {
    proptest::collection::vec((graph_strategy(), 0usize..2), 2..10).prop_map(|items| {
        let (graphs, mut labels): (Vec<Graph>, Vec<usize>) = items.into_iter().unzip();
        // Both classes present, so class ids survive the label remapping.
        labels[0] = 0;
        labels[1] = 1;
        let n = graphs.len();
        LabeledDataset::new("prop", graphs, labels, 0, Split::all_train(n)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn benchmark_layout_roundtrips(ds in dataset_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        tu::save(&ds, dir.path(), "prop").unwrap();
        let (back, report) = tu::load(dir.path(), "prop").unwrap();
        prop_assert_eq!(&back.graphs, &ds.graphs);
        prop_assert_eq!(&back.labels, &ds.labels);
        prop_assert_eq!(report.self_loops + report.duplicates + report.asymmetric, 0);
    }

    #[test]
    fn native_store_roundtrips(ds in dataset_strategy(), seed in any::<u64>(), with_roles in any::<bool>()) {
        let mut ds = ds;
        ds.resplit([1.0, 1.0, 1.0], seed).unwrap();
        if with_roles {
            ds.roles = Some(
                ds.graphs
                    .iter()
                    .map(|g| (0..g.n()).map(|i| if i % 2 == 0 { Role::Motif } else { Role::Context }).collect())
                    .collect(),
            );
        }
        let text = store::to_string(&ds);
        let back = store::parse(&text, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(store::to_string(&back), text);
    }
}
