"""Initial results schema.

Revision ID: initial_results
Create Date: 2026-10-17 12:00:00.000000
"""
from alembic import op
import sqlalchemy as sa
from sqlalchemy.dialects import sqlite

# revision identifiers, used by Alembic
revision = 'initial_results'
down_revision = None
branch_labels = None
depends_on = None


def upgrade() -> None:
    op.create_table(
        'search_runs',
        sa.Column('id', sa.String(), nullable=False),
        sa.Column('master_seed', sa.String(), nullable=False),
        sa.Column('n_trials', sa.Integer(), nullable=False),
        sa.Column('status', sa.String(), nullable=False),
        sa.Column('run_metadata', sqlite.JSON(), nullable=False),
        sa.Column('best_trial_index', sa.Integer()),
        sa.Column('best_ssim', sa.Float()),
        sa.Column('started_at', sa.DateTime(), nullable=False),
        sa.Column('completed_at', sa.DateTime()),
        sa.PrimaryKeyConstraint('id')
    )

    op.create_table(
        'trials',
        sa.Column('id', sa.Integer(), nullable=False),
        sa.Column('search_id', sa.String(), nullable=False),
        sa.Column('trial_index', sa.Integer(), nullable=False),
        sa.Column('batch_id', sa.Integer(), nullable=False),
        sa.Column('seed', sa.BigInteger(), nullable=False),
        sa.Column('config', sqlite.JSON(), nullable=False),
        sa.Column('ssim', sa.Float()),
        sa.Column('final_discrepancy', sa.Float()),
        sa.Column('status', sa.String(), nullable=False),
        sa.Column('error', sa.Text()),
        sa.Column('wall_time', sa.Float(), nullable=False),
        sa.ForeignKeyConstraint(['search_id'], ['search_runs.id'], ),
        sa.PrimaryKeyConstraint('id'),
        sa.UniqueConstraint('search_id', 'trial_index', name='uq_trials_search_index')
    )
    op.create_index('ix_trials_search_id', 'trials', ['search_id'])


def downgrade() -> None:
    op.drop_index('ix_trials_search_id', table_name='trials')
    op.drop_table('trials')
    op.drop_table('search_runs')
