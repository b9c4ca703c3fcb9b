# Analysis and generation routes
