macro_rules! example_test {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " runs"));
        }
    };
}

example_test!(p_attack_staircase, "p_attack_staircase.rs", p_attack_staircase_runs);
example_test!(pi_attack, "pi_attack.rs", pi_attack_runs);
example_test!(formula_errata, "formula_errata.rs", formula_errata_runs);
example_test!(break_even, "break_even.rs", break_even_runs);
example_test!(mitigations, "mitigations.rs", mitigations_runs);
example_test!(elasticity_markov, "elasticity_markov.rs", elasticity_markov_runs);
example_test!(parameter_sweep, "parameter_sweep.rs", parameter_sweep_runs);
example_test!(scenario_config, "scenario_config.rs", scenario_config_runs);
