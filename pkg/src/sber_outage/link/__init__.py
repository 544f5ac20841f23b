"""Link model: power accounting and fading for sber-outage."""
