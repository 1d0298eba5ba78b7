import math
import os

import sqlalchemy as sa
import sqlalchemy.orm

import config
import simulator
from schema import SQLBase, Trials, CollisionEvents, PlanningCycles

DATABASE_URL_VARIABLE = 'PLANNER_TRIALS_DATABASE_URL'


##############################################################
# Store Setup
##############################################################

def database_url(out_dir):
    """URL of the trial store for an output directory. The
    PLANNER_TRIALS_DATABASE_URL environment variable overrides it.

    Parameters
    ----------
    out_dir : str
        The output directory.

    Returns
    -------
    url : str
        The SQLAlchemy database URL.
    """
    url = os.getenv(DATABASE_URL_VARIABLE)
    if url:
        return url
    path = os.path.abspath(os.path.join(out_dir, config.TRIALS_DATABASE_NAME))
    return 'sqlite:///%s' % path


def get_session(url):
    """Open a session on the trial store, creating the tables if needed.
    """
    engine = sa.create_engine(url)
    SQLBase.metadata.create_all(engine)
    return sqlalchemy.orm.sessionmaker(bind=engine)()


def _nullable(x):
    return None if (x is None or math.isnan(x)) else float(x)


##############################################################
# Database Operations
##############################################################

def add_trial(session, result):
    """Add one episode: its trial row, collisions and planning cycles.

    Caller is responsible for committing the change. (This allows a sweep
    to succeed/fail together.)

    Parameters
    ----------
    session : Session
        The trial-store session.
    result : EpisodeResult
        The episode to store.
    """
    record = result.record
    trial = Trials()
    trial.trial_id = record.trial_id
    trial.strategy = record.strategy
    trial.t_map = record.t_map
    trial.arrival_time = record.arrival_time
    trial.path_length = record.path_length
    trial.n_collisions = record.n_collisions
    trial.n_intentional = record.n_intentional
    trial.success = record.success
    trial.seed = record.seed
    session.add(trial)

    for event in result.collisions:
        session.add(CollisionEvents(
            trial_id=record.trial_id,
            t=event.t,
            x=event.point.x,
            y=event.point.y,
            obstacle_id=event.obstacle_id,
            vx_before=event.v_before.x,
            vy_before=event.v_before.y,
            vx_after=event.v_after.x,
            vy_after=event.v_after.y,
            intentional=event.intentional,
        ))
    for cycle in result.cycles:
        session.add(PlanningCycles(
            trial_id=record.trial_id,
            t=cycle.t,
            n_sampled=cycle.n_sampled,
            n_after_position=cycle.n_after_position,
            n_after_velocity=cycle.n_after_velocity,
            pruned_ms=_nullable(cycle.pruned_ms),
            unpruned_ms=_nullable(cycle.unpruned_ms),
            mode=cycle.mode,
            total_cost=_nullable(cycle.total_cost),
        ))


def add_results(session, results):
    """Add a batch of episodes and commit.
    """
    for result in results:
        add_trial(session, result)
    session.commit()


def get_all_trials(session):
    return session.query(Trials).order_by(Trials.trial_id).all()


def get_trials_for_strategy(session, strategy):
    return session.query(Trials).filter(
        Trials.strategy == strategy
    ).order_by(Trials.trial_id).all()


def get_collisions(session, trial_id):
    return session.query(CollisionEvents).filter(
        CollisionEvents.trial_id == trial_id
    ).order_by(CollisionEvents.t).all()


def get_cycle_timings(session):
    """All planning cycles, ordered by trial then time.
    """
    return session.query(PlanningCycles).order_by(
        PlanningCycles.trial_id, PlanningCycles.t
    ).all()


def record_from_row(row):
    """Convert a Trials row back into a TrialRecord.
    """
    return simulator.TrialRecord(
        trial_id=row.trial_id,
        strategy=row.strategy,
        t_map=row.t_map,
        arrival_time=row.arrival_time,
        path_length=row.path_length,
        n_collisions=row.n_collisions,
        n_intentional=row.n_intentional,
        success=bool(row.success),
        seed=row.seed,
    )
