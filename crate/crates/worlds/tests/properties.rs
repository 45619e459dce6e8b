use proptest::prelude::*;
use worlds::{video_to_robot_grid, Domain, Geometry, GridWorld};

proptest! {
    /// Video and robot renderings of the same state are related by the fixed
    /// channel permutation + transpose; inverting recovers the robot tensor.
    #[test]
    fn rendering_bijectivity(
        width in 2usize..7,
        height in 2usize..7,
        agent_pick in 0usize..1000,
        object_pick in 0usize..1000,
        carry in proptest::bool::ANY,
    ) {
        let geom = Geometry::open(width, height, 3).unwrap();
        let free = geom.free_cells();
        let agent = free[agent_pick % free.len()];
        let object = free[object_pick % free.len()];

        let mut world = GridWorld::new(geom, agent, Domain::Robot).unwrap();
        world.place_object(1, object).unwrap();
        if carry {
            world.carrying = Some(0);
        }
        let robot_obs = world.observe();

        let mut video_world = world.clone();
        video_world.style = Domain::Video;
        let video_obs = video_world.observe();

        prop_assert!(video_obs.proprio.is_none());
        prop_assert_eq!(video_to_robot_grid(&video_obs).unwrap(), robot_obs.grid);
    }
}
