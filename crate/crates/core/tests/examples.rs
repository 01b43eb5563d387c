//! Every example compiles as a module here and runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().expect(concat!(stringify!($name), " failed"));
            }
        }
    };
}

example!(helmholtz_green);
example!(initial_data);
example!(viscous_run);
example!(bound_certificates);
example!(entropy_certify);
example!(w_form_crosscheck);
example!(epsilon_sweep);
example!(trajectory_io);
example!(experiment_config);
