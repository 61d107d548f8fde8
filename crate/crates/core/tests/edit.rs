use cityforge_core::edit::{apply_diff, apply_edit, parse_edit_command, parse_edit_json, EditContext, EditError, EditVerb};
use cityforge_core::metrics::collision_rate;
use cityforge_testkit::{self as kit, LayoutOptions};
use proptest::prelude::*;

#[test]
fn closure_over_random_commands() {
    let ctx = EditContext::default();
    let mut rng = kit::rng(81);
    let (mut applied, mut set_verbs) = (0, 0);
    for _ in 0..500 {
        let city = kit::random_city(&mut rng, LayoutOptions::default());
        let command = kit::random_edit_command(&mut rng, &city);
        assert_eq!(parse_edit_command(&command.to_text()).unwrap(), command);
        assert_eq!(parse_edit_json(&command.to_json()).unwrap(), command);
        let r = match apply_edit(&city, &command, &ctx) {
            Ok(r) => r,
            Err(EditError::UnknownTarget(_) | EditError::InvalidArgument(_) | EditError::InfeasibleDensity { .. }) => {
                continue
            }
            Err(e) => panic!("{command:?}: {e}"),
        };
        applied += 1;
        r.program_after.validate().unwrap();
        assert_eq!(apply_diff(&city, &r.diff).unwrap(), r.program_after);
        match command.verb {
            EditVerb::SetFloorCount { .. } | EditVerb::SetStyle { .. } | EditVerb::SetComponent { .. } => {
                set_verbs += 1;
                let twice = apply_edit(&r.program_after, &command, &ctx).unwrap();
                assert_eq!(twice.program_after, r.program_after, "{command:?}");
                assert!(twice.diff.is_empty());
                if !matches!(command.verb, EditVerb::SetStyle { .. }) {
                    assert!(r.diff.len() <= 1);
                }
            }
            EditVerb::ScaleDensity { .. } => {
                let before = collision_rate(&city.block).unwrap();
                assert!(collision_rate(&r.program_after.block).unwrap() <= before + 1e-9);
            }
            _ => {}
        }
    }
    assert!(applied > 250 && set_verbs > 100, "{applied} applied, {set_verbs} set verbs");
}

proptest! {
    #[test]
    fn density_never_adds_collision(seed in any::<u64>(), target in 0.05..0.95f64, allow_move in any::<bool>()) {
        let city = kit::random_city(&mut kit::rng(seed), LayoutOptions::default());
        let text = format!("scale_density block {target} allow_move={allow_move}");
        match apply_edit(&city, &parse_edit_command(&text).unwrap(), &EditContext::default()) {
            Ok(r) => {
                prop_assert!(collision_rate(&r.program_after.block).unwrap() <= collision_rate(&city.block).unwrap() + 1e-9);
                r.program_after.validate().unwrap();
            }
            Err(EditError::InfeasibleDensity { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
