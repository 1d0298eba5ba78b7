import logging

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

STRATEGY_COLORS = {
    'harness': 'tab:red',
    'high_risk': 'tab:blue',
    'low_risk': 'tab:green',
}


def _draw_polygon(ax, polygon, **kwargs):
    xs = [v[0] for v in polygon.vertices] + [polygon.vertices[0][0]]
    ys = [v[1] for v in polygon.vertices] + [polygon.vertices[0][1]]
    ax.plot(xs, ys, **kwargs)


def plot_world(ax, world):
    """Draw the arena, the obstacles and their inflated outlines.
    """
    _draw_polygon(ax, world.bounds, color='black', linewidth=1.5)
    for obstacle in world.obstacles:
        ax.fill(
            [v[0] for v in obstacle.vertices], [v[1] for v in obstacle.vertices],
            color='0.6'
        )
    for inflated in world.collision_obstacles[:len(world.obstacles)]:
        _draw_polygon(ax, inflated, color='0.4', linestyle='--', linewidth=0.8)
    ax.plot(*world.start, marker='o', color='black')
    ax.plot(*world.goal, marker='*', markersize=12, color='gold')
    ax.set_aspect('equal')


def plot_trajectories(world, results, path):
    """Overlay every trajectory of each strategy on its own panel.

    Parameters
    ----------
    world : World
        The world the trials ran in.
    results : list of EpisodeResult
        The episodes.
    path : str
        Output image file.
    """
    strategies = sorted({r.record.strategy for r in results})
    fig, axes = plt.subplots(
        1, len(strategies), figsize=(5 * len(strategies), 5), squeeze=False
    )
    for ax, strategy in zip(axes[0], strategies):
        plot_world(ax, world)
        color = STRATEGY_COLORS.get(strategy, 'tab:purple')
        for result in results:
            if result.record.strategy != strategy:
                continue
            xs = [row[1] for row in result.trajectory_rows]
            ys = [row[2] for row in result.trajectory_rows]
            ax.plot(xs, ys, color=color, linewidth=0.8, alpha=0.6)
            for event in result.collisions:
                ax.plot(
                    event.point.x, event.point.y, marker='x',
                    color='black' if event.intentional else 'gray'
                )
        ax.set_title(strategy)
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info('Wrote %s', path)


def plot_tmap_panels(tmap_rows, path):
    """Four panels: mean and STD of arrival time and path length vs t_map.

    Parameters
    ----------
    tmap_rows : list of dict
        Rows from harness.tmap_summary.
    path : str
        Output image file.
    """
    panels = [
        ('mean_arrival_time', 'Mean arrival time (s)'),
        ('std_arrival_time', 'STD arrival time (s)'),
        ('mean_path_length', 'Mean path length (m)'),
        ('std_path_length', 'STD path length (m)'),
    ]
    fig, axes = plt.subplots(2, 2, figsize=(10, 8))
    strategies = sorted({row['strategy'] for row in tmap_rows})
    for ax, (key, label) in zip(axes.flat, panels):
        for strategy in strategies:
            rows = sorted(
                (r for r in tmap_rows if r['strategy'] == strategy),
                key=lambda r: r['t_map']
            )
            ax.plot(
                [r['t_map'] for r in rows], [r[key] for r in rows],
                marker='o', label=strategy,
                color=STRATEGY_COLORS.get(strategy, 'tab:purple')
            )
        ax.set_xlabel('T_map (s)')
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes.flat[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info('Wrote %s', path)
