import sqlalchemy as db
import sqlalchemy.orm

##############################################################
# Setup Stages
##############################################################

# Engines and sessions are created per store by db.get_session, since every
# sweep output directory carries its own trial store.
SQLBase = sqlalchemy.orm.declarative_base()

# Strategy: one row per trial in Trials. Collision events and planning cycles
# hang off a trial through its trial_id, which is the sweep-wide sequential
# identifier also used in trials.csv (not the autoincrement id).


class Trials(SQLBase):
    __tablename__ = 'trials'
    id = db.Column(db.Integer(), primary_key=True)
    trial_id = db.Column(db.Integer(), nullable=False, unique=True)
    strategy = db.Column(db.String(50), nullable=False)
    t_map = db.Column(db.Float(), nullable=False)
    arrival_time = db.Column(db.Float(), nullable=False)
    path_length = db.Column(db.Float(), nullable=False)
    n_collisions = db.Column(db.Integer(), nullable=False)
    n_intentional = db.Column(db.Integer(), nullable=False)
    success = db.Column(db.Boolean(), nullable=False)
    seed = db.Column(db.Integer(), nullable=False)

    @sqlalchemy.orm.validates('strategy')
    def validate_strategy(self, key, strategy):
        if len(strategy) == 0:
            raise ValueError('Value for key "strategy" is empty!')
        if len(strategy) > self.__table__.columns[key].type.length:
            raise ValueError(
                'Value of "%s" for key "strategy" is too long!' % strategy
            )
        return strategy

    @sqlalchemy.orm.validates('n_collisions')
    def validate_n_collisions(self, key, n_collisions):
        if n_collisions < 0:
            raise ValueError(
                'Value of "%s" for key "n_collisions" is negative!'
                % n_collisions
            )
        return n_collisions

    @sqlalchemy.orm.validates('n_intentional')
    def validate_n_intentional(self, key, n_intentional):
        # n_collisions must be set first:
        if n_intentional < 0 or (
            (self.n_collisions is not None) and
            (n_intentional > self.n_collisions)
        ):
            raise ValueError(
                'Value of "%s" for key "n_intentional" is invalid!'
                % n_intentional
            )
        return n_intentional

    @sqlalchemy.orm.validates('t_map', 'arrival_time', 'path_length')
    def validate_non_negative(self, key, value):
        if not value >= 0:
            raise ValueError(
                'Value of "%s" for key "%s" is invalid!' % (value, key)
            )
        return value


class CollisionEvents(SQLBase):
    __tablename__ = 'collision_events'
    id = db.Column(db.Integer(), primary_key=True)
    trial_id = db.Column(
        db.Integer(), db.ForeignKey('trials.trial_id'), nullable=False
    )
    t = db.Column(db.Float(), nullable=False)
    x = db.Column(db.Float(), nullable=False)
    y = db.Column(db.Float(), nullable=False)
    obstacle_id = db.Column(db.Integer(), nullable=False)
    vx_before = db.Column(db.Float(), nullable=False)
    vy_before = db.Column(db.Float(), nullable=False)
    vx_after = db.Column(db.Float(), nullable=False)
    vy_after = db.Column(db.Float(), nullable=False)
    intentional = db.Column(db.Boolean(), nullable=False)


class PlanningCycles(SQLBase):
    __tablename__ = 'planning_cycles'
    id = db.Column(db.Integer(), primary_key=True)
    trial_id = db.Column(
        db.Integer(), db.ForeignKey('trials.trial_id'), nullable=False
    )
    t = db.Column(db.Float(), nullable=False)
    n_sampled = db.Column(db.Integer(), nullable=False)
    n_after_position = db.Column(db.Integer(), nullable=False)
    n_after_velocity = db.Column(db.Integer(), nullable=False)
    # Timings are NULL when they were not measured:
    pruned_ms = db.Column(db.Float(), nullable=True)
    unpruned_ms = db.Column(db.Float(), nullable=True)
    # mode can be "free_space", "boundary_following" or "flow_through"
    mode = db.Column(db.String(25), nullable=False)
    total_cost = db.Column(db.Float(), nullable=True)

    @sqlalchemy.orm.validates('mode')
    def validate_mode(self, key, mode):
        if mode not in ['free_space', 'boundary_following', 'flow_through']:
            raise ValueError('Value of "%s" for key "mode" is invalid!' % mode)
        return mode
